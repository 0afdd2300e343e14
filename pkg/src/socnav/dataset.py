"""Synthetic scenario generation and expert demonstration production.

Scenarios are drawn at random (robot pose, goal at 2 to 4.5 m, people and
rectangular obstacles in the local window), rejection-resampled until start
and goal are collision-free with clearance and a uniform-cost planner run
proves feasibility. Demonstrations are then planned under a fixed expert
feature cost; each accepted item yields the scenario, the expert path, and
the encoded input/label raster pair. Everything derives from (seed, index),
so a rebuilt corpus is byte-identical.
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import obstacle_clearance, point_in_collision
from .features import DEFAULT_FEATURE_PARAMS, FeatureParams, WeightVector, save_weights_csv
from .grid import FloatGrid, GridSpec, load_fgrid, save_fgrid
from .irl import Demonstration
from .parallel import thread_map
from .planner import LinearFeatures, PlannerParams, plan
from .raster import encode_input_raster, rasterize_path
from .scenario import (
    Path,
    Person,
    Pose2D,
    Rect,
    Scenario,
    ScenarioArrays,
    load_path_csv,
    load_scenario,
    save_path_csv,
    save_scenario,
)

log = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "validation", "test")

DEFAULT_EXPERT_WEIGHTS = WeightVector(np.array([0.3, 0.25, 0.15, 0.15, 0.15]))


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    scenario_count: int = 500
    people_range: tuple[int, int] = (0, 5)
    obstacle_density: int = 3  # maximum rectangles per window
    expert_weights: WeightVector = DEFAULT_EXPERT_WEIGHTS
    expert_planner_params: PlannerParams = field(
        default_factory=lambda: PlannerParams(max_iterations=3000, goal_tolerance=0.25)
    )
    grid_size: int = 64
    split: tuple[int, int, int] = (400, 50, 50)
    rng_seed: int = 0
    window_size: float = 10.0
    goal_distance_range: tuple[float, float] = (2.0, 4.5)
    min_clearance: float = 0.2
    feasibility_iterations: int = 2000
    feature_params: FeatureParams = DEFAULT_FEATURE_PARAMS

    def __post_init__(self):
        if self.scenario_count <= 0:
            raise ValueError("scenario_count must be positive")
        if len(self.split) != 3 or any(s <= 0 for s in self.split):
            raise ValueError(f"split must be three positive counts, got {self.split}")
        if sum(self.split) != self.scenario_count:
            raise ValueError(
                f"split {self.split} does not sum to scenario_count {self.scenario_count}"
            )
        lo, hi = self.people_range
        if lo < 0 or hi < lo:
            raise ValueError(f"invalid people_range {self.people_range}")
        if self.obstacle_density < 0:
            raise ValueError("obstacle_density must be >= 0")
        d0, d1 = self.goal_distance_range
        if not 0 < d0 < d1 or d1 > self.window_size / 2.0 - 0.25:
            raise ValueError(
                f"goal_distance_range {self.goal_distance_range} must fit the window"
            )

    def grid_spec(self) -> GridSpec:
        return GridSpec.for_window(self.grid_size, self.window_size)

    def split_of(self, index: int) -> str:
        if index < self.split[0]:
            return "train"
        if index < self.split[0] + self.split[1]:
            return "validation"
        return "test"


def _clearance(x: float, y: float, arrays: ScenarioArrays) -> float:
    d = obstacle_clearance(x, y, arrays.rects, arrays.segs)
    for i in range(arrays.discs.shape[0]):
        dd = math.hypot(x - arrays.discs[i, 0], y - arrays.discs[i, 1]) - arrays.discs[i, 2]
        d = min(d, dd)
    return d


def generate_scenario(config: GeneratorConfig, index: int, attempt: int = 0) -> Scenario:
    """Deterministically generate a feasible scenario for (seed, index).

    Candidates are rejection-resampled until robot and goal are collision
    free with clearance and a uniform-cost planner finds a path. Raises
    GenerationError after 100 consecutive rejections.
    """
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((config.rng_seed, index, attempt))
    ))
    half = config.window_size / 2.0
    margin = half - 0.5
    for _ in range(100):
        robot = Pose2D(rng.uniform(-10, 10), rng.uniform(-10, 10),
                       rng.uniform(-math.pi, math.pi))
        n_rect = int(rng.integers(0, config.obstacle_density + 1))
        rects = []
        for _ in range(n_rect):
            local = rng.uniform(-margin, margin, 2)
            cx, cy = robot.to_world(local[None])[0]
            w = rng.uniform(0.4, 1.8)
            h = rng.uniform(0.4, 1.8)
            rects.append(Rect(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2))
        n_people = int(rng.integers(config.people_range[0], config.people_range[1] + 1))
        people = []
        for _ in range(n_people):
            local = rng.uniform(-margin, margin, 2)
            px, py = robot.to_world(local[None])[0]
            people.append(Person(Pose2D(px, py, rng.uniform(-math.pi, math.pi))))
        d = rng.uniform(*config.goal_distance_range)
        phi = rng.uniform(-math.pi, math.pi)
        gx, gy = robot.to_world([[d * math.cos(phi), d * math.sin(phi)]])[0]
        goal = Pose2D(gx, gy, rng.uniform(-math.pi, math.pi))
        feasibility_seed = int(rng.integers(0, 2**63 - 1))

        try:
            scenario = Scenario(
                robot=robot, goal=goal, people=tuple(people),
                rect_obstacles=tuple(rects), window_size=config.window_size,
            )
        except ValueError:
            continue
        arrays = ScenarioArrays.build(scenario)
        if point_in_collision(robot.x, robot.y, arrays.rects, arrays.segs, arrays.discs):
            continue
        if point_in_collision(goal.x, goal.y, arrays.rects, arrays.segs, arrays.discs):
            continue
        if _clearance(robot.x, robot.y, arrays) < config.min_clearance:
            continue
        if _clearance(goal.x, goal.y, arrays) < config.min_clearance:
            continue
        check = plan(
            scenario, LinearFeatures(np.zeros(5), scenario, config.feature_params),
            params=replace(config.expert_planner_params,
                           max_iterations=config.feasibility_iterations,
                           rng_seed=feasibility_seed),
        )
        if check.success:
            return scenario
    raise GenerationError(
        f"100 consecutive rejections for index {index}; config too dense"
    )


@dataclass(frozen=True)
class DemonstrationBundle:
    demonstration: Demonstration
    input_grid: FloatGrid
    label_grid: FloatGrid
    expert_cost: float


def generate_demonstration(
    scenario: Scenario, config: GeneratorConfig, seed: int = 0
) -> DemonstrationBundle | None:
    """Plan the expert path and build the raster pair; None if planning fails."""
    result = plan(
        scenario, LinearFeatures(config.expert_weights, scenario, config.feature_params),
        params=replace(config.expert_planner_params, rng_seed=seed),
    )
    if not result.success:
        return None
    spec = config.grid_spec()
    return DemonstrationBundle(
        demonstration=Demonstration(scenario, result.path),
        input_grid=encode_input_raster(scenario, spec),
        label_grid=rasterize_path(result.path, spec, frame=scenario.robot),
        expert_cost=result.stats.final_cost,
    )


@dataclass(frozen=True)
class ManifestEntry:
    index: int
    split: str
    scenario_file: str
    input_grid: str
    label_grid: str
    path_file: str
    seed: int
    expert_cost: float


def _build_item(config: GeneratorConfig, index: int):
    for attempt in range(20):
        scenario = generate_scenario(config, index, attempt)
        seed = _item_seed(config.rng_seed, index, attempt)
        bundle = generate_demonstration(scenario, config, seed)
        if bundle is not None:
            return bundle, seed
        log.warning("index %d attempt %d: expert planner failed, regenerating", index, attempt)
    raise GenerationError(f"no demonstrable scenario found for index {index}")


def _item_seed(rng_seed: int, index: int, attempt: int) -> int:
    return int(np.random.SeedSequence((rng_seed, index, attempt, 7)).generate_state(
        1, dtype=np.uint64)[0] >> 1)


def build_dataset(config: GeneratorConfig, out_dir) -> list[ManifestEntry]:
    """Generate the full corpus and write it under out_dir.

    Layout: <split>/item_<index>_{scenario.json,input.fgrid,label.fgrid,path.csv},
    a manifest.csv listing every item, and the expert weights used.
    """
    for split in SPLIT_NAMES:
        os.makedirs(os.path.join(out_dir, split), exist_ok=True)

    def make(index: int):
        bundle, seed = _build_item(config, index)
        split = config.split_of(index)
        stem = f"item_{index:05d}"
        rel = {
            "scenario_file": f"{split}/{stem}_scenario.json",
            "input_grid": f"{split}/{stem}_input.fgrid",
            "label_grid": f"{split}/{stem}_label.fgrid",
            "path_file": f"{split}/{stem}_path.csv",
        }
        save_scenario(bundle.demonstration.scenario, os.path.join(out_dir, rel["scenario_file"]))
        save_fgrid(bundle.input_grid, os.path.join(out_dir, rel["input_grid"]))
        save_fgrid(bundle.label_grid, os.path.join(out_dir, rel["label_grid"]))
        save_path_csv(bundle.demonstration.expert_path, os.path.join(out_dir, rel["path_file"]))
        return ManifestEntry(index=index, split=split, seed=seed,
                             expert_cost=bundle.expert_cost, **rel)

    entries = thread_map(make, range(config.scenario_count))
    write_manifest(entries, os.path.join(out_dir, "manifest.csv"))
    save_weights_csv(config.expert_weights, os.path.join(out_dir, "expert_weights.csv"))
    return entries


def write_manifest(entries: list[ManifestEntry], filename) -> None:
    with open(filename, "w", encoding="ascii") as f:
        f.write("index,split,scenario_file,input_grid,label_grid,path_file,seed,expert_cost\n")
        for e in entries:
            f.write(
                f"{e.index},{e.split},{e.scenario_file},{e.input_grid},"
                f"{e.label_grid},{e.path_file},{e.seed},{e.expert_cost!r}\n"
            )


def load_manifest(out_dir) -> list[ManifestEntry]:
    filename = os.path.join(out_dir, "manifest.csv")
    entries = []
    with open(filename, "r", encoding="ascii") as f:
        header = f.readline().strip()
        expected = "index,split,scenario_file,input_grid,label_grid,path_file,seed,expert_cost"
        if header != expected:
            raise ValueError(f"unexpected manifest header in {filename}")
        for line in f:
            line = line.strip()
            if not line:
                continue
            (idx, split, scen, ing, lab, pat, seed, cost) = line.split(",")
            entries.append(ManifestEntry(
                index=int(idx), split=split, scenario_file=scen, input_grid=ing,
                label_grid=lab, path_file=pat, seed=int(seed), expert_cost=float(cost),
            ))
    return entries


def load_split_rasters(out_dir, split: str):
    """(input, label) raster pairs of one split as (1,H,W) float32 arrays."""
    pairs = []
    for e in load_manifest(out_dir):
        if e.split != split:
            continue
        x = load_fgrid(os.path.join(out_dir, e.input_grid)).values[None]
        y = load_fgrid(os.path.join(out_dir, e.label_grid)).values[None]
        pairs.append((x, y))
    return pairs


def load_split_demonstrations(out_dir, split: str) -> list[Demonstration]:
    demos = []
    for e in load_manifest(out_dir):
        if e.split != split:
            continue
        demos.append(Demonstration(
            load_scenario(os.path.join(out_dir, e.scenario_file)),
            load_path_csv(os.path.join(out_dir, e.path_file)),
        ))
    return demos
