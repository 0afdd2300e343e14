"""Path-comparison metrics and evaluation reports.

The core metric is a symmetrized mean closest-point distance between two
paths: each path is resampled to a fixed step, every point of one path is
projected onto the other polyline (segment interiors included, not just
vertices), and the two directed means are averaged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .features import DEFAULT_FEATURE_PARAMS, FeatureParams, feature_count
from .scenario import Path, Scenario, resample_path

RESAMPLE_STEP = 0.05


def _min_dist_to_polyline(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Distance from each of (N,2) points to an (M,2) polyline."""
    if poly.shape[0] == 1:
        return np.hypot(points[:, 0] - poly[0, 0], points[:, 1] - poly[0, 1])
    a = poly[:-1]  # (M-1, 2)
    d = poly[1:] - a
    len2 = (d**2).sum(axis=1)
    # t: (N, M-1) clamped projection parameter of each point on each segment
    diff = points[:, None, :] - a[None, :, :]
    t = np.clip((diff * d[None, :, :]).sum(axis=2) / len2[None, :], 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * d[None, :, :]
    dist2 = ((points[:, None, :] - closest) ** 2).sum(axis=2)
    return np.sqrt(dist2.min(axis=1))


def directed_distance(a: Path, b: Path, step: float = RESAMPLE_STEP) -> float:
    """Mean distance from the points of `a` to their closest points on `b`.

    `a` is resampled to `step` first so the mean reflects geometry rather
    than waypoint density; the projection target is the exact polyline of
    `b` (segment interiors included, not just vertices).
    """
    ra = resample_path(a, step).points
    return float(_min_dist_to_polyline(ra, b.points).mean())


def mu(a: Path, b: Path, step: float = RESAMPLE_STEP) -> float:
    """Symmetrized path distance: the mean of the two directed distances."""
    return 0.5 * (directed_distance(a, b, step) + directed_distance(b, a, step))


def feature_count_difference(
    plan: Path,
    expert: Path,
    scenario: Scenario,
    params: FeatureParams = DEFAULT_FEATURE_PARAMS,
) -> float:
    """Mean absolute difference of the five path feature counts."""
    fp = feature_count(plan, scenario, params)
    fe = feature_count(expert, scenario, params)
    return float(np.abs(fp - fe).mean())


def cdf_export(values, resolution: int = 100) -> list[tuple[float, float]]:
    """Empirical CDF sampled at evenly spaced thresholds from 0 to max(values)."""
    vals = np.asarray(list(values), dtype=float)
    if vals.size == 0:
        raise ValueError("cdf_export needs at least one value")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    thresholds = np.linspace(0.0, float(vals.max()), resolution)
    fractions = (vals[None, :] <= thresholds[:, None]).mean(axis=1)
    return [(float(t), float(f)) for t, f in zip(thresholds, fractions)]


# ---------------------------------------------------------------------------
# evaluation report


@dataclass(frozen=True)
class EvalReport:
    """Per-trajectory metrics plus aggregates for one approach."""

    names: tuple[str, ...]
    mu_values: np.ndarray
    fc_diff_values: np.ndarray
    cdf_resolution: int = 100

    def __post_init__(self):
        mu_v = np.asarray(self.mu_values, dtype=float)
        fc_v = np.asarray(self.fc_diff_values, dtype=float)
        if mu_v.shape != fc_v.shape or mu_v.ndim != 1 or mu_v.size == 0:
            raise ValueError("per-trajectory arrays must be equal-length, non-empty 1-d")
        if np.any(mu_v < 0):
            raise ValueError("mu values must be non-negative")
        object.__setattr__(self, "mu_values", mu_v)
        object.__setattr__(self, "fc_diff_values", fc_v)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def mu_mean(self) -> float:
        return float(self.mu_values.mean())

    @property
    def mu_stderr(self) -> float:
        n = self.mu_values.size
        if n < 2:
            return 0.0
        return float(self.mu_values.std(ddof=1) / math.sqrt(n))

    @property
    def fc_diff_mean(self) -> float:
        return float(self.fc_diff_values.mean())

    @property
    def fc_diff_stderr(self) -> float:
        n = self.fc_diff_values.size
        if n < 2:
            return 0.0
        return float(self.fc_diff_values.std(ddof=1) / math.sqrt(n))

    def mu_cdf(self) -> list[tuple[float, float]]:
        return cdf_export(self.mu_values, self.cdf_resolution)

    def fc_diff_cdf(self) -> list[tuple[float, float]]:
        return cdf_export(self.fc_diff_values, self.cdf_resolution)


def evaluate_paths(
    plans: list[Path],
    experts: list[Path],
    scenarios: list[Scenario],
    names: list[str] | None = None,
    params: FeatureParams = DEFAULT_FEATURE_PARAMS,
) -> EvalReport:
    if not (len(plans) == len(experts) == len(scenarios)):
        raise ValueError("plans, experts and scenarios must have equal lengths")
    if names is None:
        names = [str(i) for i in range(len(plans))]
    mu_vals = [mu(p, e) for p, e in zip(plans, experts)]
    fc_vals = [
        feature_count_difference(p, e, s, params)
        for p, e, s in zip(plans, experts, scenarios)
    ]
    return EvalReport(tuple(names), np.array(mu_vals), np.array(fc_vals))


def write_report_csvs(report: EvalReport, out_dir, prefix: str) -> list[str]:
    """Write per-trajectory, aggregate and CDF CSVs; returns the filenames."""
    import os

    paths = []
    per_traj = os.path.join(out_dir, f"{prefix}_per_trajectory.csv")
    with open(per_traj, "w", encoding="ascii") as f:
        f.write("name,mu,feature_count_diff\n")
        for name, m, fc in zip(report.names, report.mu_values, report.fc_diff_values):
            f.write(f"{name},{float(m)!r},{float(fc)!r}\n")
    paths.append(per_traj)

    agg = os.path.join(out_dir, f"{prefix}_aggregate.csv")
    with open(agg, "w", encoding="ascii") as f:
        f.write("metric,mean,stderr,count\n")
        f.write(f"mu,{report.mu_mean!r},{report.mu_stderr!r},{report.mu_values.size}\n")
        f.write(
            f"feature_count_diff,{report.fc_diff_mean!r},"
            f"{report.fc_diff_stderr!r},{report.fc_diff_values.size}\n"
        )
    paths.append(agg)

    for label, cdf in (("mu", report.mu_cdf()), ("fc_diff", report.fc_diff_cdf())):
        name = os.path.join(out_dir, f"{prefix}_cdf_{label}.csv")
        with open(name, "w", encoding="ascii") as f:
            f.write("threshold,fraction\n")
            for t, frac in cdf:
                f.write(f"{t!r},{frac!r}\n")
        paths.append(name)
    return paths
