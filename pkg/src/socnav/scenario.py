"""World-frame scenario description: robot, goal, people and static obstacles.

Everything lives in a metric world frame (meters, radians). A scenario is a
local navigation task: the area of interest is a square window of
``window_size`` meters centered on the robot and aligned with its heading.
All value objects are immutable after construction and safe to share.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

TAU = 2.0 * math.pi

DEFAULT_WINDOW_SIZE = 10.0


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    r = math.remainder(float(theta), TAU)
    if r <= -math.pi:
        r += TAU
    return r


@dataclass(frozen=True)
class Pose2D:
    """Planar pose; theta is normalized into (-pi, pi] on construction."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def to_local(self, points: np.ndarray) -> np.ndarray:
        """Map world-frame points (N,2) into this pose's frame."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        c, s = math.cos(self.theta), math.sin(self.theta)
        dx = pts[:, 0] - self.x
        dy = pts[:, 1] - self.y
        return np.stack([c * dx + s * dy, -s * dx + c * dy], axis=1)

    def to_world(self, points: np.ndarray) -> np.ndarray:
        """Map points (N,2) in this pose's frame back to the world frame."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.stack(
            [self.x + c * pts[:, 0] - s * pts[:, 1],
             self.y + s * pts[:, 0] + c * pts[:, 1]],
            axis=1,
        )


@dataclass(frozen=True)
class Person:
    """A static person with position, orientation and body footprint radius."""

    pose: Pose2D
    body_radius: float = 0.25

    def __post_init__(self):
        if self.body_radius <= 0:
            raise ValueError(f"body_radius must be > 0, got {self.body_radius}")


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangular obstacle (world frame, meters)."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError(f"degenerate rectangle {self}")

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


@dataclass(frozen=True)
class Segment:
    """Wall-like obstacle: a segment with a physical thickness (capsule)."""

    x1: float
    y1: float
    x2: float
    y2: float
    thickness: float = 0.1

    def __post_init__(self):
        if self.thickness <= 0:
            raise ValueError(f"thickness must be > 0, got {self.thickness}")
        if self.x1 == self.x2 and self.y1 == self.y2:
            raise ValueError("degenerate segment obstacle")


@dataclass(frozen=True)
class Scenario:
    """A local navigation task: robot start, goal, people and obstacles.

    Invariants checked at construction: the goal lies inside the local window
    centered on the robot, and neither robot nor goal is inside an obstacle.
    """

    robot: Pose2D
    goal: Pose2D
    people: tuple[Person, ...] = ()
    rect_obstacles: tuple[Rect, ...] = ()
    segment_obstacles: tuple[Segment, ...] = ()
    window_size: float = DEFAULT_WINDOW_SIZE

    def __post_init__(self):
        object.__setattr__(self, "people", tuple(self.people))
        object.__setattr__(self, "rect_obstacles", tuple(self.rect_obstacles))
        object.__setattr__(self, "segment_obstacles", tuple(self.segment_obstacles))
        half = self.window_size / 2.0
        local_goal = self.robot.to_local([[self.goal.x, self.goal.y]])[0]
        if abs(local_goal[0]) > half or abs(local_goal[1]) > half:
            raise ValueError(
                f"goal {local_goal} outside the {self.window_size} m local window"
            )
        for name, pose in (("robot", self.robot), ("goal", self.goal)):
            if self._point_in_obstacle(pose.x, pose.y):
                raise ValueError(f"{name} position ({pose.x}, {pose.y}) inside an obstacle")

    def _point_in_obstacle(self, x: float, y: float) -> bool:
        for r in self.rect_obstacles:
            if r.contains(x, y):
                return True
        for s in self.segment_obstacles:
            if _point_segment_dist(x, y, s.x1, s.y1, s.x2, s.y2) <= s.thickness / 2.0:
                return True
        return False


def _point_segment_dist(px, py, x1, y1, x2, y2):
    dx, dy = x2 - x1, y2 - y1
    t = ((px - x1) * dx + (py - y1) * dy) / (dx * dx + dy * dy)
    t = min(1.0, max(0.0, t))
    cx, cy = x1 + t * dx, y1 + t * dy
    return math.hypot(px - cx, py - cy)


# ---------------------------------------------------------------------------
# Paths


@dataclass(frozen=True)
class Path:
    """Ordered world-frame waypoints; consecutive duplicates are forbidden."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise ValueError(f"path must be an (N,2) array with N >= 1, got {pts.shape}")
        if pts.shape[0] > 1:
            seg = np.diff(pts, axis=0)
            if np.any(np.hypot(seg[:, 0], seg[:, 1]) == 0.0):
                raise ValueError("path contains consecutive duplicate points")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def length(self) -> float:
        if len(self) < 2:
            return 0.0
        seg = np.diff(self.points, axis=0)
        return float(np.hypot(seg[:, 0], seg[:, 1]).sum())


def resample_path(path: Path, step: float = 0.05) -> Path:
    """Resample a path to uniform arc-length stations of at most `step`.

    The station spacing is total_length / ceil(total_length / step), so the
    stations are exactly uniform, both endpoints are kept exactly, and
    reversing the path yields the same station set (mirrored). When the
    length is an exact multiple of `step` the spacing is exactly `step`.
    A single-point path is returned unchanged.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    pts = path.points
    if pts.shape[0] < 2:
        return path
    seg = np.diff(pts, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = cum[-1]
    n = max(1, int(math.ceil(total / step - 1e-9)))
    stations = np.linspace(0.0, total, n + 1)
    idx = np.clip(np.searchsorted(cum, stations, side="right") - 1, 0, len(seg_len) - 1)
    t = (stations - cum[idx]) / seg_len[idx]
    out = pts[idx] + t[:, None] * seg[idx]
    out[0] = pts[0]
    out[-1] = pts[-1]
    # fold-back vertices can make consecutive stations coincide; drop those
    keep = np.ones(len(out), dtype=bool)
    d = np.hypot(*(np.diff(out, axis=0).T))
    keep[1:] = d > 1e-12
    return Path(out[keep])


# ---------------------------------------------------------------------------
# File formats: scenario JSON and path CSV


def scenario_to_json(scenario: Scenario) -> str:
    doc = {
        "robot": {"x": scenario.robot.x, "y": scenario.robot.y, "theta": scenario.robot.theta},
        "goal": {"x": scenario.goal.x, "y": scenario.goal.y, "theta": scenario.goal.theta},
        "people": [
            {
                "x": p.pose.x,
                "y": p.pose.y,
                "theta": p.pose.theta,
                "body_radius": p.body_radius,
            }
            for p in scenario.people
        ],
        "rect_obstacles": [
            {"x_min": r.x_min, "y_min": r.y_min, "x_max": r.x_max, "y_max": r.y_max}
            for r in scenario.rect_obstacles
        ],
        "segment_obstacles": [
            {"x1": s.x1, "y1": s.y1, "x2": s.x2, "y2": s.y2, "thickness": s.thickness}
            for s in scenario.segment_obstacles
        ],
        "window_size": scenario.window_size,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def scenario_from_json(text: str) -> Scenario:
    doc = json.loads(text)
    try:
        return Scenario(
            robot=Pose2D(**doc["robot"]),
            goal=Pose2D(**doc["goal"]),
            people=tuple(
                Person(Pose2D(p["x"], p["y"], p["theta"]), p.get("body_radius", 0.25))
                for p in doc.get("people", [])
            ),
            rect_obstacles=tuple(Rect(**r) for r in doc.get("rect_obstacles", [])),
            segment_obstacles=tuple(Segment(**s) for s in doc.get("segment_obstacles", [])),
            window_size=doc.get("window_size", DEFAULT_WINDOW_SIZE),
        )
    except KeyError as e:
        raise ValueError(f"scenario JSON missing required key: {e}") from e


def save_scenario(scenario: Scenario, filename) -> None:
    with open(filename, "w", encoding="ascii") as f:
        f.write(scenario_to_json(scenario))
        f.write("\n")


def load_scenario(filename) -> Scenario:
    with open(filename, "r", encoding="ascii") as f:
        return scenario_from_json(f.read())


def save_path_csv(path: Path, filename) -> None:
    with open(filename, "w", encoding="ascii") as f:
        for x, y in path.points:
            f.write(f"{float(x)!r},{float(y)!r}\n")


def load_path_csv(filename) -> Path:
    pts = []
    with open(filename, "r", encoding="ascii") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            sx, sy = line.split(",")
            pts.append((float(sx), float(sy)))
    if not pts:
        raise ValueError(f"empty path file: {filename}")
    return Path(np.array(pts))


# ---------------------------------------------------------------------------
# Array view consumed by the compiled kernels

@dataclass(frozen=True)
class ScenarioArrays:
    """Flat ndarray view of a scenario for the numba kernels.

    rects: (R,4) x_min,y_min,x_max,y_max
    segs: (S,5) x1,y1,x2,y2,half_width
    discs: (P,3) x,y,radius (people bodies, impassable)
    people: (P,4) x,y,cos(theta),sin(theta)
    goal: (2,)
    """

    rects: np.ndarray
    segs: np.ndarray
    discs: np.ndarray
    people: np.ndarray
    goal: np.ndarray
    window_center: np.ndarray
    window_half: float
    window_cos: float
    window_sin: float

    @staticmethod
    def build(scenario: Scenario) -> "ScenarioArrays":
        rects = np.array(
            [[r.x_min, r.y_min, r.x_max, r.y_max] for r in scenario.rect_obstacles],
            dtype=np.float64,
        ).reshape(-1, 4)
        segs = np.array(
            [[s.x1, s.y1, s.x2, s.y2, s.thickness / 2.0] for s in scenario.segment_obstacles],
            dtype=np.float64,
        ).reshape(-1, 5)
        discs = np.array(
            [[p.pose.x, p.pose.y, p.body_radius] for p in scenario.people],
            dtype=np.float64,
        ).reshape(-1, 3)
        people = np.array(
            [
                [p.pose.x, p.pose.y, math.cos(p.pose.theta), math.sin(p.pose.theta)]
                for p in scenario.people
            ],
            dtype=np.float64,
        ).reshape(-1, 4)
        return ScenarioArrays(
            rects=rects,
            segs=segs,
            discs=discs,
            people=people,
            goal=np.array([scenario.goal.x, scenario.goal.y]),
            window_center=np.array([scenario.robot.x, scenario.robot.y]),
            window_half=scenario.window_size / 2.0,
            window_cos=math.cos(scenario.robot.theta),
            window_sin=math.sin(scenario.robot.theta),
        )
