"""Hand-crafted social-navigation features and path feature counts.

Five features, each in [0, 1]:
  goal_distance       Euclidean distance to the goal over the window diagonal
  obstacle_proximity  Gaussian of the clearance to the closest static obstacle
  proxemics_front     asymmetric Gaussian ahead of each person (max over people)
  proxemics_back      asymmetric Gaussian behind each person
  proxemics_sides     lateral Gaussian around each person

The proxemics Gaussians have amplitude 1 at the person center. Front covers
local x >= 0 and back local x <= 0, so both peak at the center. Multiple
people combine with max, keeping every feature in [0, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .scenario import Path, Scenario, ScenarioArrays, resample_path

FEATURE_NAMES = (
    "goal_distance",
    "obstacle_proximity",
    "proxemics_front",
    "proxemics_back",
    "proxemics_sides",
)

RESAMPLE_STEP = 0.05  # meters, matches the default grid resolution


@dataclass(frozen=True)
class FeatureParams:
    """Gaussian shape parameters of the feature set (meters)."""

    sigma_obstacle: float = 0.4
    front_sx: float = 1.2
    front_sy: float = 0.6
    back_sx: float = 0.8
    back_sy: float = 0.6
    side_sx: float = 0.6
    side_sy: float = 1.0

    def pack(self, scenario: Scenario) -> np.ndarray:
        d_max = scenario.window_size * math.sqrt(2.0)
        return np.array(
            [scenario.goal.x, scenario.goal.y, d_max, self.sigma_obstacle,
             self.front_sx, self.front_sy, self.back_sx, self.back_sy,
             self.side_sx, self.side_sy],
            dtype=np.float64,
        )


DEFAULT_FEATURE_PARAMS = FeatureParams()


@dataclass(frozen=True)
class WeightVector:
    """Non-negative weights for the five features."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64).copy()
        if w.shape != (5,):
            raise ValueError(f"expected 5 weights, got shape {w.shape}")
        if np.any(w < 0):
            raise ValueError(f"weights must be non-negative, got {w}")
        w.flags.writeable = False
        object.__setattr__(self, "w", w)

    @staticmethod
    def uniform() -> "WeightVector":
        return WeightVector(np.full(5, 0.2))

    def normalized(self) -> "WeightVector":
        s = float(self.w.sum())
        if s <= 0:
            raise ValueError("cannot normalize all-zero weights")
        return WeightVector(self.w / s)


def feature_values(
    points: np.ndarray,
    scenario: Scenario,
    params: FeatureParams = DEFAULT_FEATURE_PARAMS,
    arrays: ScenarioArrays | None = None,
) -> np.ndarray:
    """Evaluate the five features at (N,2) world points; returns (N,5)."""
    if arrays is None:
        arrays = ScenarioArrays.build(scenario)
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    fparams = params.pack(scenario)
    return _kernels.features_batch(pts, fparams, arrays.people, arrays.rects, arrays.segs)


def feature_vector(
    point,
    scenario: Scenario,
    params: FeatureParams = DEFAULT_FEATURE_PARAMS,
) -> np.ndarray:
    """The five features at a single world point."""
    return feature_values(np.asarray(point, dtype=float).reshape(1, 2), scenario, params)[0]


def linear_cost(
    point,
    scenario: Scenario,
    weights: WeightVector,
    params: FeatureParams = DEFAULT_FEATURE_PARAMS,
) -> float:
    """1 + w . f(point); strictly positive, so edge costs grow with length."""
    f = feature_vector(point, scenario, params)
    return 1.0 + float(np.dot(weights.w, f))


def feature_count(
    path: Path,
    scenario: Scenario,
    params: FeatureParams = DEFAULT_FEATURE_PARAMS,
    step: float = RESAMPLE_STEP,
    arrays: ScenarioArrays | None = None,
) -> np.ndarray:
    """Trapezoidal path integral of the feature vector (5,), meter * feature.

    The path is resampled to a fixed arc-length step first so counts are
    comparable between planners with different waypoint densities.
    """
    resampled = resample_path(path, step)
    pts = resampled.points
    if pts.shape[0] < 2:
        return np.zeros(5)
    f = feature_values(pts, scenario, params, arrays=arrays)
    seg = np.diff(pts, axis=0)
    ds = np.hypot(seg[:, 0], seg[:, 1])
    return ((f[:-1] + f[1:]) * 0.5 * ds[:, None]).sum(axis=0)


# ---------------------------------------------------------------------------
# weights file: CSV `name,value` with the canonical feature names


def save_weights_csv(weights: WeightVector, filename) -> None:
    with open(filename, "w", encoding="ascii") as f:
        for name, value in zip(FEATURE_NAMES, weights.w):
            f.write(f"{name},{float(value)!r}\n")


def load_weights_csv(filename) -> WeightVector:
    values: dict[str, float] = {}
    with open(filename, "r", encoding="ascii") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            name, _, raw = line.partition(",")
            name = name.strip()
            if name not in FEATURE_NAMES:
                raise ValueError(f"unknown feature name {name!r} in {filename}")
            values[name] = float(raw)
    missing = [n for n in FEATURE_NAMES if n not in values]
    if missing:
        raise ValueError(f"weights file {filename} missing features: {missing}")
    return WeightVector(np.array([values[n] for n in FEATURE_NAMES]))
