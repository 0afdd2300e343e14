"""RRT* planner with pluggable state costs and prediction-biased sampling.

The planner grows a tree in the world frame inside the local window of a
scenario. State costs come from one of two providers: a linear combination of
the social-navigation features, or a predicted-path grid used as a cost map
(low cost where the prediction is bright). A prediction grid can additionally
bias sampling: a configurable fraction of samples is drawn from pixels whose
predicted intensity exceeds a threshold, proportionally to the excess.

Planning is deterministic given the seed: all randomness comes from one
pregenerated uniform stream, consumed per iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import _kernels
from .features import DEFAULT_FEATURE_PARAMS, FeatureParams, WeightVector
from .grid import FloatGrid
from .scenario import Path, Pose2D, Scenario, ScenarioArrays

COST_STEP = 0.05  # meters between integrand points of an edge cost

_EMPTY_GRID = np.zeros((1, 1), dtype=np.float64)
_EMPTY_GPARAMS = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
_EMPTY_EXPERT = np.zeros((0, 2), dtype=np.float64)
_EMPTY_LPARAMS = np.zeros(3, dtype=np.float64)


@dataclass(frozen=True)
class PlannerParams:
    max_iterations: int = 5000
    steer_step: float = 0.25
    goal_tolerance: float = 0.15
    rewire_gamma: float = 9.0
    bias_fraction: float = 0.7
    bias_threshold: float = 0.2
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_iterations <= 0 or self.steer_step <= 0 or self.goal_tolerance <= 0:
            raise ValueError("planner parameters must be positive")
        if self.rewire_gamma <= 0:
            raise ValueError("rewire_gamma must be positive")
        if not 0.0 <= self.bias_fraction <= 1.0:
            raise ValueError("bias_fraction must be in [0, 1]")
        if not 0.0 < self.bias_threshold < 1.0:
            raise ValueError("bias_threshold must be in (0, 1)")


def _grid_frame_params(grid: FloatGrid, anchor: Pose2D, gain: float = 0.0) -> np.ndarray:
    return np.array(
        [grid.resolution, grid.origin[0], grid.origin[1],
         anchor.x, anchor.y, math.cos(anchor.theta), math.sin(anchor.theta), gain],
        dtype=np.float64,
    )


@dataclass(frozen=True)
class LinearFeatures:
    """State cost 1 + w . f(x) from the social-navigation features.

    `weights` may be a WeightVector or any 5-array of non-negative reals;
    all-zero weights give the uniform cost 1 (pure shortest path).
    """

    weights: Union[WeightVector, np.ndarray]
    scenario: Scenario
    feature_params: FeatureParams = DEFAULT_FEATURE_PARAMS

    def _pack(self):
        w = self.weights.w if isinstance(self.weights, WeightVector) else self.weights
        w = np.ascontiguousarray(w, dtype=np.float64)
        arrays = ScenarioArrays.build(self.scenario)
        return (0, w, self.feature_params.pack(self.scenario), arrays.people,
                _EMPTY_GRID, _EMPTY_GPARAMS, _EMPTY_EXPERT, _EMPTY_LPARAMS,
                arrays.rects, arrays.segs, arrays.discs)


@dataclass(frozen=True)
class PredictionGrid:
    """State cost 1 + gain * (1 - p(x)) from a predicted-path raster.

    The raster lives in the frame of `anchor` (the robot pose it was encoded
    around, defaulting to the scenario robot); p is bilinearly interpolated
    and clamped to [0, 1].
    """

    grid: FloatGrid
    scenario: Scenario
    gain: float = 4.0
    anchor: Optional[Pose2D] = None
    feature_params: FeatureParams = DEFAULT_FEATURE_PARAMS

    def _pack(self):
        anchor = self.anchor if self.anchor is not None else self.scenario.robot
        arrays = ScenarioArrays.build(self.scenario)
        gridvals = np.ascontiguousarray(self.grid.values, dtype=np.float64)
        gparams = _grid_frame_params(self.grid, anchor, self.gain)
        return (1, np.zeros(5), self.feature_params.pack(self.scenario), arrays.people,
                gridvals, gparams, _EMPTY_EXPERT, _EMPTY_LPARAMS,
                arrays.rects, arrays.segs, arrays.discs)


@dataclass(frozen=True)
class CorridorDiscountedFeatures:
    """Linear feature cost discounted inside a corridor around a target path.

    Used by the max-margin trainer: cost max(floor, 1 + w . f(x) - loss_weight)
    within corridor_radius of the target path, the plain linear cost outside.
    """

    weights: Union[WeightVector, np.ndarray]
    scenario: Scenario
    target_path: Path
    corridor_radius: float = 0.3
    loss_weight: float = 0.5
    cost_floor: float = 0.1
    feature_params: FeatureParams = DEFAULT_FEATURE_PARAMS

    def _pack(self):
        w = self.weights.w if isinstance(self.weights, WeightVector) else self.weights
        w = np.ascontiguousarray(w, dtype=np.float64)
        arrays = ScenarioArrays.build(self.scenario)
        expert = np.ascontiguousarray(self.target_path.points, dtype=np.float64)
        lparams = np.array([self.corridor_radius, self.loss_weight, self.cost_floor])
        return (2, w, self.feature_params.pack(self.scenario), arrays.people,
                _EMPTY_GRID, _EMPTY_GPARAMS, expert, lparams,
                arrays.rects, arrays.segs, arrays.discs)


CostProvider = Union[LinearFeatures, PredictionGrid, CorridorDiscountedFeatures]


def state_cost(provider: CostProvider, point) -> float:
    """Cost of being at a world point; inf inside obstacles or people."""
    x, y = float(point[0]), float(point[1])
    return float(_kernels.state_cost(*_splice(provider._pack(), x, y)))


def edge_cost(provider: CostProvider, a, b, step: float = COST_STEP) -> float:
    """Trapezoidal integral of state_cost along a->b; inf if it collides."""
    pack = provider._pack()
    return float(_kernels.edge_cost(
        pack[0], float(a[0]), float(a[1]), float(b[0]), float(b[1]), step, *pack[1:]
    ))


def _splice(pack, x, y):
    return (pack[0], x, y) + pack[1:]


# ---------------------------------------------------------------------------
# sampling


class Sampler:
    """Draws planner samples: biased toward a prediction grid, else uniform.

    With probability bias_fraction a pixel is drawn with probability
    proportional to max(0, p - bias_threshold) and jittered uniformly inside
    the pixel; otherwise the sample is uniform over the local window. If a
    prediction is supplied but has no pixel above the threshold, sampling
    falls back to uniform and `bias_fallback` is set.
    """

    def __init__(
        self,
        scenario: Scenario,
        prediction: Optional[FloatGrid],
        params: PlannerParams,
        anchor: Optional[Pose2D] = None,
    ):
        self.params = params
        self.bias_fallback = False
        self.n_draws = 0
        self.n_biased = 0
        arr = ScenarioArrays.build(scenario)
        self._win = np.array(
            [arr.window_center[0], arr.window_center[1], arr.window_half,
             arr.window_cos, arr.window_sin]
        )
        self._cdf = np.zeros(0)
        self._pix = np.zeros(0, dtype=np.int64)
        self._grid_w = 1
        self._sparams = _EMPTY_GPARAMS
        if prediction is not None:
            mass = np.maximum(prediction.values.astype(np.float64) - params.bias_threshold, 0.0)
            total = mass.sum()
            if total <= 0.0:
                self.bias_fallback = True
            else:
                flat = mass.ravel()
                nz = np.nonzero(flat)[0]
                self._cdf = np.cumsum(flat[nz]) / total
                self._pix = nz.astype(np.int64)
                self._grid_w = prediction.width
                self._sparams = _grid_frame_params(
                    prediction, anchor if anchor is not None else scenario.robot
                )
        self._rng = np.random.Generator(np.random.PCG64(params.rng_seed))

    @property
    def bias_active(self) -> bool:
        return self._cdf.shape[0] > 0

    def draw(self, n: int = 1) -> np.ndarray:
        """Draw n world-frame samples; returns (n, 2)."""
        u = self._rng.random((n, 4))
        out = np.empty((n, 2))
        biased = self.bias_active & (u[:, 0] < self.params.bias_fraction)
        # uniform draws over the heading-aligned window
        lx = (2.0 * u[:, 1] - 1.0) * self._win[2]
        ly = (2.0 * u[:, 2] - 1.0) * self._win[2]
        out[:, 0] = self._win[0] + self._win[3] * lx - self._win[4] * ly
        out[:, 1] = self._win[1] + self._win[4] * lx + self._win[3] * ly
        if np.any(biased):
            j = np.minimum(
                np.searchsorted(self._cdf, u[biased, 1], side="right"),
                len(self._cdf) - 1,
            )
            pidx = self._pix[j]
            py, px = np.divmod(pidx, self._grid_w)
            res, ox, oy = self._sparams[0], self._sparams[1], self._sparams[2]
            glx = ox + (px + (u[biased, 2] - 0.5)) * res
            gly = oy + (py + (u[biased, 3] - 0.5)) * res
            c, s = self._sparams[5], self._sparams[6]
            out[biased, 0] = self._sparams[3] + c * glx - s * gly
            out[biased, 1] = self._sparams[4] + s * glx + c * gly
        self.n_draws += n
        self.n_biased += int(biased.sum())
        return out


# ---------------------------------------------------------------------------
# planner


@dataclass(frozen=True)
class PlanStats:
    iterations: int
    tree_size: int
    final_cost: float
    n_draws: int = 0
    n_biased_draws: int = 0
    bias_fallback: bool = False

    @property
    def success(self) -> bool:
        return math.isfinite(self.final_cost)


@dataclass(frozen=True)
class PlanResult:
    path: Optional[Path]
    stats: PlanStats
    nodes: np.ndarray = field(repr=False, default_factory=lambda: np.zeros((0, 2)))
    parents: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def success(self) -> bool:
        return self.path is not None


class RrtStar:
    """Resumable RRT* instance; one instance plans one query."""

    def __init__(
        self,
        scenario: Scenario,
        provider: CostProvider,
        prediction: Optional[FloatGrid] = None,
        params: PlannerParams = PlannerParams(),
    ):
        self.scenario = scenario
        self.params = params
        self._pack = provider._pack()
        arr = ScenarioArrays.build(scenario)
        self._arr = arr
        sx, sy = scenario.robot.x, scenario.robot.y
        gx, gy = scenario.goal.x, scenario.goal.y
        if _kernels.point_in_collision(sx, sy, arr.rects, arr.segs, arr.discs):
            raise ValueError("start position is in collision")
        if _kernels.point_in_collision(gx, gy, arr.rects, arr.segs, arr.discs):
            raise ValueError("goal position is in collision")

        cap = params.max_iterations + 1
        self._nodes = np.zeros((cap, 2))
        self._parent = np.full(cap, -1, dtype=np.int64)
        self._cost = np.zeros(cap)
        self._first_child = np.full(cap, -1, dtype=np.int64)
        self._next_sib = np.full(cap, -1, dtype=np.int64)
        self._prev_sib = np.full(cap, -1, dtype=np.int64)
        self._near_goal = np.zeros(cap, dtype=np.bool_)
        self._stack = np.zeros(cap, dtype=np.int64)
        self._nodes[0] = (sx, sy)
        self._near_goal[0] = math.hypot(sx - gx, sy - gy) <= params.goal_tolerance
        self._state = np.array([1, 0], dtype=np.int64)

        self._win = np.array(
            [arr.window_center[0], arr.window_center[1], arr.window_half,
             arr.window_cos, arr.window_sin]
        )
        sampler = Sampler(scenario, prediction, params)
        self._bias_cdf = sampler._cdf
        self._bias_pix = sampler._pix
        self._sparams = sampler._sparams
        self._grid_w = sampler._grid_w
        self.bias_fallback = sampler.bias_fallback
        rng = np.random.Generator(np.random.PCG64(params.rng_seed))
        self._uniforms = rng.random((params.max_iterations, 4))
        self._it = 0

    # tree views for tests and visualization
    @property
    def tree_size(self) -> int:
        return int(self._state[0])

    @property
    def nodes(self) -> np.ndarray:
        return self._nodes[: self.tree_size].copy()

    @property
    def parents(self) -> np.ndarray:
        return self._parent[: self.tree_size].copy()

    @property
    def costs(self) -> np.ndarray:
        return self._cost[: self.tree_size].copy()

    def step(self, n_iters: int) -> None:
        """Advance the planner by up to n_iters iterations."""
        it1 = min(self._it + n_iters, self.params.max_iterations)
        if it1 <= self._it:
            return
        p = self._pack
        _kernels.plan_core(
            self._nodes, self._parent, self._cost,
            self._first_child, self._next_sib, self._prev_sib, self._near_goal,
            self._state, self._it, it1, self._uniforms,
            self.scenario.goal.x, self.scenario.goal.y, self.params.goal_tolerance,
            self._win, self.params.steer_step, self.params.rewire_gamma, COST_STEP,
            self.params.bias_fraction, self._bias_cdf, self._bias_pix,
            self._sparams, self._grid_w,
            p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8], p[9], p[10],
            self._stack,
        )
        self._it = it1

    def best_goal_cost(self) -> float:
        n = self.tree_size
        mask = self._near_goal[:n]
        if not np.any(mask):
            return math.inf
        return float(self._cost[:n][mask].min())

    def finish(self) -> PlanResult:
        """Extract the best goal-reaching path and the run statistics."""
        n = self.tree_size
        stats = PlanStats(
            iterations=self._it,
            tree_size=n,
            final_cost=self.best_goal_cost(),
            n_draws=self._it,
            n_biased_draws=int(self._state[1]),
            bias_fallback=self.bias_fallback,
        )
        nodes = self.nodes
        parents = self.parents
        mask = self._near_goal[:n]
        if not np.any(mask):
            return PlanResult(path=None, stats=stats, nodes=nodes, parents=parents)
        goal_ids = np.nonzero(mask)[0]
        best = int(goal_ids[np.argmin(self._cost[:n][mask])])
        chain = []
        k = best
        while k != -1:
            chain.append(k)
            k = int(self._parent[k])
        chain.reverse()
        pts = self._nodes[np.array(chain)]
        return PlanResult(
            path=Path(_drop_collinear(pts)), stats=stats, nodes=nodes, parents=parents
        )

    def run(self) -> PlanResult:
        self.step(self.params.max_iterations)
        return self.finish()


def _drop_collinear(pts: np.ndarray) -> np.ndarray:
    """Remove interior points collinear with their neighbors."""
    if len(pts) <= 2:
        return pts
    keep = [pts[0]]
    for i in range(1, len(pts) - 1):
        a, b, c = keep[-1], pts[i], pts[i + 1]
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        lim = 1e-12 * math.hypot(b[0] - a[0], b[1] - a[1]) * math.hypot(c[0] - b[0], c[1] - b[1])
        if abs(cross) > lim:
            keep.append(b)
    keep.append(pts[-1])
    return np.array(keep)


def plan(
    scenario: Scenario,
    provider: CostProvider,
    prediction: Optional[FloatGrid] = None,
    params: PlannerParams = PlannerParams(),
) -> PlanResult:
    """Plan from the scenario robot pose to its goal. Failure is a result,
    not an exception: a PlanResult with path None when no node reaches the
    goal within tolerance after max_iterations."""
    return RrtStar(scenario, provider, prediction, params).run()
