"""Inverse reinforcement learning baselines on top of the RRT* planner.

Both trainers learn the weights of the linear feature cost from
demonstrations by matching path feature counts:

  rtirl_train  max-entropy style: the planner's expected feature counts are
               approximated by averaging K independent planner runs per demo,
               and weights move to close the gap to the expert counts.
  rlt_train    max-margin style: each demo is re-planned under a
               loss-augmented cost that discounts states near the expert
               path, and the subgradient is the expert-minus-plan count gap.

After every update the weights are projected to be non-negative and
renormalized to sum to one. Everything is deterministic given the config
seed: each planner run gets a seed derived from (seed, iteration, demo, run).
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .features import (
    DEFAULT_FEATURE_PARAMS,
    FEATURE_NAMES,
    FeatureParams,
    WeightVector,
    feature_count,
)
from .parallel import thread_map
from .planner import CorridorDiscountedFeatures, LinearFeatures, PlannerParams, plan
from .scenario import (
    Path,
    Scenario,
    load_path_csv,
    load_scenario,
    save_path_csv,
    save_scenario,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Demonstration:
    """A scenario paired with the expert path solving it."""

    scenario: Scenario
    expert_path: Path


def validate_demonstration(
    demo: Demonstration,
    goal_tolerance: float = 0.3,
    start_tolerance: float = 1e-6,
) -> None:
    start = demo.expert_path.points[0]
    end = demo.expert_path.points[-1]
    robot = demo.scenario.robot
    goal = demo.scenario.goal
    if math.hypot(start[0] - robot.x, start[1] - robot.y) > start_tolerance:
        raise ValueError(
            f"expert path starts at {tuple(start)}, not at the robot ({robot.x}, {robot.y})"
        )
    d = math.hypot(end[0] - goal.x, end[1] - goal.y)
    if d > goal_tolerance:
        raise ValueError(
            f"expert path ends {d:.3f} m from the goal (tolerance {goal_tolerance})"
        )


@dataclass(frozen=True)
class IrlConfig:
    iterations: int = 30
    learning_rate: float = 0.3
    planner_params: PlannerParams = field(default_factory=PlannerParams)
    planner_runs_per_demo: int = 5
    margin_loss_weight: float = 0.5
    corridor_radius: float = 0.3
    cost_floor: float = 0.1
    rng_seed: int = 0
    update_rule: str = "projected"  # or "exponentiated"
    initial_weights: WeightVector | None = None  # default: uniform
    feature_params: FeatureParams = DEFAULT_FEATURE_PARAMS

    def __post_init__(self):
        if self.iterations <= 0 or self.learning_rate <= 0:
            raise ValueError("iterations and learning_rate must be positive")
        if self.planner_runs_per_demo <= 0:
            raise ValueError("planner_runs_per_demo must be positive")
        if self.update_rule not in ("projected", "exponentiated"):
            raise ValueError(f"unknown update rule {self.update_rule!r}")


@dataclass(frozen=True)
class IrlIterationLog:
    iteration: int
    grad_norm: float
    weights: np.ndarray
    mean_feature_error: float
    failed_demos: int


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(tuple(parts)).generate_state(1, dtype=np.uint64)[0])


def _plan_counts_rtirl(demo, w, config, it, di):
    """Mean feature counts over K planner runs; None if every run fails."""
    provider = LinearFeatures(w, demo.scenario, config.feature_params)
    counts = []
    for k in range(config.planner_runs_per_demo):
        seed = _derived_seed(config.rng_seed, it, di, k)
        result = plan(demo.scenario, provider,
                      params=replace(config.planner_params, rng_seed=seed))
        if result.success:
            counts.append(feature_count(result.path, demo.scenario, config.feature_params))
    if not counts:
        return None
    return np.mean(counts, axis=0)


def _plan_counts_rlt(demo, w, config, it, di):
    """Feature counts of one loss-augmented plan; None on failure."""
    provider = CorridorDiscountedFeatures(
        w, demo.scenario, demo.expert_path,
        corridor_radius=config.corridor_radius,
        loss_weight=config.margin_loss_weight,
        cost_floor=config.cost_floor,
        feature_params=config.feature_params,
    )
    seed = _derived_seed(config.rng_seed, it, di, 0)
    result = plan(demo.scenario, provider,
                  params=replace(config.planner_params, rng_seed=seed))
    if not result.success:
        return None
    return feature_count(result.path, demo.scenario, config.feature_params)


def _apply_update(w: np.ndarray, g: np.ndarray, config: IrlConfig) -> np.ndarray:
    if config.update_rule == "exponentiated":
        w = w * np.exp(-config.learning_rate * g)
    else:
        w = np.maximum(w - config.learning_rate * g, 0.0)
    s = w.sum()
    if s <= 1e-12:
        log.warning("all weights projected to zero; resetting to uniform")
        return np.full(5, 0.2)
    return w / s


def _train(demos, config: IrlConfig, plan_counts) -> tuple[WeightVector, list[IrlIterationLog]]:
    if not demos:
        raise ValueError("need at least one demonstration")
    f_expert = [
        feature_count(d.expert_path, d.scenario, config.feature_params) for d in demos
    ]
    if config.initial_weights is not None:
        w = config.initial_weights.normalized().w.copy()
    else:
        w = np.full(5, 0.2)
    logs: list[IrlIterationLog] = []
    for it in range(config.iterations):
        plan_f = thread_map(
            lambda di: plan_counts(demos[di], w, config, it, di), range(len(demos))
        )
        grads = []
        errors = []
        failed = 0
        for di, fp in enumerate(plan_f):
            if fp is None:
                failed += 1
                log.warning("iteration %d: planner failed on demo %d, skipping", it, di)
                continue
            grads.append(f_expert[di] - fp)
            errors.append(float(np.abs(fp - f_expert[di]).mean()))
        if not grads:
            raise RuntimeError(f"planner failed on every demonstration at iteration {it}")
        g = np.mean(grads, axis=0)
        w = _apply_update(w, g, config)
        logs.append(IrlIterationLog(
            iteration=it,
            grad_norm=float(np.linalg.norm(g)),
            weights=w.copy(),
            mean_feature_error=float(np.mean(errors)),
            failed_demos=failed,
        ))
    return WeightVector(w), logs


def rtirl_train(demos, config: IrlConfig) -> tuple[WeightVector, list[IrlIterationLog]]:
    """Max-entropy IRL with the planner as the distribution proxy.

    Per iteration and demo, the planner runs K times under the current
    weights; the update closes the gap between the averaged planner feature
    counts and the expert counts, then projects and renormalizes.
    """
    return _train(demos, config, _plan_counts_rtirl)


def rlt_train(demos, config: IrlConfig) -> tuple[WeightVector, list[IrlIterationLog]]:
    """Max-margin planning adapted to the sampling planner.

    Per demo the planner runs once under the corridor-discounted cost; the
    subgradient is expert counts minus loss-augmented plan counts.
    """
    return _train(demos, config, _plan_counts_rlt)


def write_irl_log_csv(logs: list[IrlIterationLog], filename) -> None:
    with open(filename, "w", encoding="ascii") as f:
        names = ",".join(f"w_{n}" for n in FEATURE_NAMES)
        f.write(f"iteration,grad_norm,{names},mean_feature_error,failed_demos\n")
        for entry in logs:
            ws = ",".join(repr(float(v)) for v in entry.weights)
            f.write(
                f"{entry.iteration},{entry.grad_norm!r},{ws},"
                f"{entry.mean_feature_error!r},{entry.failed_demos}\n"
            )


# ---------------------------------------------------------------------------
# demonstration directories: paired <stem>_scenario.json / <stem>_path.csv


def save_demonstrations(demos, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    for i, demo in enumerate(demos):
        stem = os.path.join(directory, f"demo_{i:04d}")
        save_scenario(demo.scenario, stem + "_scenario.json")
        save_path_csv(demo.expert_path, stem + "_path.csv")


def load_demonstrations(directory, goal_tolerance: float = 0.3):
    names = sorted(n for n in os.listdir(directory) if n.endswith("_scenario.json"))
    if not names:
        raise ValueError(f"no *_scenario.json files in {directory}")
    demos = []
    for name in names:
        stem = name[: -len("_scenario.json")]
        scen_file = os.path.join(directory, name)
        path_file = os.path.join(directory, stem + "_path.csv")
        if not os.path.exists(path_file):
            raise ValueError(f"missing path file for {scen_file}: {path_file}")
        demo = Demonstration(load_scenario(scen_file), load_path_csv(path_file))
        validate_demonstration(demo, goal_tolerance=goal_tolerance)
        demos.append(demo)
    return demos
