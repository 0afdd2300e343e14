"""Rasterization of scenarios and paths into robot-centered grids.

The encoded input raster is a gray-scale image of the local window: the grid
frame is the robot frame (robot at the center pixel, +x along the robot
heading). Intensities are fixed and maximally separated: background 0.0,
people 0.6, goal 0.8, obstacles 1.0; overlaps resolve to the brightest value.
Path labels are binary 1-pixel-thick polylines.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FloatGrid, GridSpec
from .scenario import Path, Pose2D, Scenario

OBSTACLE_INTENSITY = 1.0
GOAL_INTENSITY = 0.8
PERSON_INTENSITY = 0.6


@dataclass(frozen=True)
class EncodeParams:
    """Glyph geometry for the input raster; intensities are module constants."""

    goal_radius: float = 0.15
    triangle_apex: float = 0.5  # meters ahead of the person center


def _pixel_centers_world(spec: GridSpec, frame: Pose2D) -> tuple[np.ndarray, np.ndarray]:
    ox, oy = spec.origin
    coords = ox + np.arange(spec.size) * spec.resolution
    lx, ly = np.meshgrid(coords, coords)  # ly varies along rows (row 0 = min y)
    c, s = np.cos(frame.theta), np.sin(frame.theta)
    wx = frame.x + c * lx - s * ly
    wy = frame.y + s * lx + c * ly
    return wx, wy


def _point_seg_dist2(px, py, x1, y1, x2, y2):
    dx, dy = x2 - x1, y2 - y1
    t = np.clip(((px - x1) * dx + (py - y1) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
    cx, cy = x1 + t * dx, y1 + t * dy
    return (px - cx) ** 2 + (py - cy) ** 2


def _triangle_mask(wx, wy, verts):
    mask = np.ones(wx.shape, dtype=bool)
    for i in range(3):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % 3]
        cross = (bx - ax) * (wy - ay) - (by - ay) * (wx - ax)
        mask &= cross >= 0.0
    return mask


def encode_input_raster(
    scenario: Scenario,
    spec: GridSpec | None = None,
    params: EncodeParams = EncodeParams(),
) -> FloatGrid:
    """Project a scenario into the robot-centered gray-scale input grid."""
    if spec is None:
        spec = GridSpec.for_window(200, scenario.window_size)
    grid = FloatGrid.zeros(spec)
    local_goal = scenario.robot.to_local([[scenario.goal.x, scenario.goal.y]])[0]
    if not grid.contains_point(local_goal[0], local_goal[1]):
        raise ValueError(
            f"goal at local {tuple(local_goal)} falls outside the "
            f"{spec.window_size:.2f} m raster window"
        )

    wx, wy = _pixel_centers_world(spec, scenario.robot)
    values = np.zeros(wx.shape, dtype=np.float64)

    person_mask = np.zeros(wx.shape, dtype=bool)
    for person in scenario.people:
        px, py = person.pose.x, person.pose.y
        person_mask |= (wx - px) ** 2 + (wy - py) ** 2 <= person.body_radius**2
        # orientation triangle: apex ahead of the center, base across the body
        verts_local = np.array(
            [
                [params.triangle_apex, 0.0],
                [0.0, person.body_radius],
                [0.0, -person.body_radius],
            ]
        )
        verts = person.pose.to_world(verts_local)
        person_mask |= _triangle_mask(wx, wy, verts)
    values[person_mask] = PERSON_INTENSITY

    goal_mask = (wx - scenario.goal.x) ** 2 + (wy - scenario.goal.y) ** 2 <= params.goal_radius**2
    values[goal_mask] = GOAL_INTENSITY

    obstacle_mask = np.zeros(wx.shape, dtype=bool)
    for r in scenario.rect_obstacles:
        obstacle_mask |= (wx >= r.x_min) & (wx <= r.x_max) & (wy >= r.y_min) & (wy <= r.y_max)
    for s in scenario.segment_obstacles:
        obstacle_mask |= _point_seg_dist2(wx, wy, s.x1, s.y1, s.x2, s.y2) <= (s.thickness / 2.0) ** 2
    values[obstacle_mask] = OBSTACLE_INTENSITY

    return grid.with_values(values.astype(np.float32))


# ---------------------------------------------------------------------------
# Path labels


def bresenham_px(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """8-connected integer line from (x0,y0) to (x1,y1), endpoints included."""
    pts = []
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        pts.append((x, y))
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy
    return pts


def draw_polyline_px(values: np.ndarray, pixels: np.ndarray, value: float) -> None:
    """Mark a polyline of pixel coordinates (N,2 int) into a value array."""
    for i in range(len(pixels) - 1):
        for px, py in bresenham_px(*pixels[i], *pixels[i + 1]):
            values[py, px] = value
    if len(pixels) == 1:
        values[pixels[0][1], pixels[0][0]] = value


def rasterize_path(
    path: Path,
    spec: GridSpec | None = None,
    frame: Pose2D = Pose2D(0.0, 0.0, 0.0),
) -> FloatGrid:
    """Rasterize a world-frame path into a binary label grid in `frame`."""
    if spec is None:
        spec = GridSpec.for_window(200)
    grid = FloatGrid.zeros(spec)
    local = frame.to_local(path.points)
    pixels = np.empty((len(local), 2), dtype=np.int64)
    for i, (lx, ly) in enumerate(local):
        pixels[i] = grid.world_to_grid(lx, ly)  # raises if outside the window
    values = np.zeros((spec.size, spec.size), dtype=np.float32)
    draw_polyline_px(values, pixels, 1.0)
    return grid.with_values(values)
