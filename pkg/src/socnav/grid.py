"""Metric float grids and their file formats.

A FloatGrid is a row-major H x W array of float32 values in a metric frame:
``origin`` gives the metric coordinates of the center of pixel (0, 0) and
rows advance toward +y (row 0 is the minimum-y row). Rasters produced from a
scenario use the robot frame as their metric frame: the robot sits at the
center pixel and +x of the grid is the robot heading.

Formats:
  FGRID  binary, bit-exact: ASCII header
         ``FGRID <width> <height> <resolution> <origin_x> <origin_y>\\n``
         followed by width*height little-endian IEEE-754 32-bit floats.
  PGM    P5 8-bit export (values scaled by 255), for visualization only.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Pixel count and resolution of a square raster window."""

    size: int = 200
    resolution: float = 0.05

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("grid size must be >= 2")
        if self.resolution <= 0:
            raise ValueError("resolution must be > 0")

    @property
    def window_size(self) -> float:
        return self.size * self.resolution

    @property
    def origin(self) -> tuple[float, float]:
        # robot-centered convention: the robot is at pixel (size//2, size//2)
        o = -(self.size // 2) * self.resolution
        return (o, o)

    @staticmethod
    def for_window(size_px: int, window: float = 10.0) -> "GridSpec":
        """Spec covering a fixed metric window with size_px pixels per side."""
        return GridSpec(size=size_px, resolution=window / size_px)


@dataclass(frozen=True)
class FloatGrid:
    """H x W float32 values with a metric frame attached."""

    width: int
    height: int
    resolution: float
    origin: tuple[float, float]
    values: np.ndarray  # shape (height, width), float32

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.shape != (self.height, self.width):
            raise ValueError(
                f"values shape {v.shape} does not match {self.height}x{self.width}"
            )
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        if self.resolution <= 0:
            raise ValueError("resolution must be > 0")

    @staticmethod
    def zeros(spec: GridSpec) -> "FloatGrid":
        return FloatGrid(
            width=spec.size,
            height=spec.size,
            resolution=spec.resolution,
            origin=spec.origin,
            values=np.zeros((spec.size, spec.size), dtype=np.float32),
        )

    def with_values(self, values: np.ndarray) -> "FloatGrid":
        return FloatGrid(self.width, self.height, self.resolution, self.origin, values)

    def grid_to_world(self, px: int, py: int) -> tuple[float, float]:
        """Metric coordinates of the center of pixel (px, py)."""
        if not (0 <= px < self.width and 0 <= py < self.height):
            raise IndexError(f"pixel ({px}, {py}) outside {self.width}x{self.height} grid")
        return (self.origin[0] + px * self.resolution,
                self.origin[1] + py * self.resolution)

    def world_to_grid(self, x: float, y: float) -> tuple[int, int]:
        """Pixel containing metric point (x, y); inverse of grid_to_world."""
        px = int(round((x - self.origin[0]) / self.resolution))
        py = int(round((y - self.origin[1]) / self.resolution))
        if not (0 <= px < self.width and 0 <= py < self.height):
            raise IndexError(f"point ({x}, {y}) outside the grid window")
        return (px, py)

    def contains_point(self, x: float, y: float) -> bool:
        px = (x - self.origin[0]) / self.resolution
        py = (y - self.origin[1]) / self.resolution
        return -0.5 <= px < self.width - 0.5 and -0.5 <= py < self.height - 0.5


# ---------------------------------------------------------------------------
# FGRID binary format


def save_fgrid(grid: FloatGrid, filename) -> None:
    header = (
        f"FGRID {grid.width} {grid.height} {grid.resolution!r} "
        f"{grid.origin[0]!r} {grid.origin[1]!r}\n"
    )
    data = np.ascontiguousarray(grid.values, dtype="<f4")
    with open(filename, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(data.tobytes())


def load_fgrid(filename) -> FloatGrid:
    with open(filename, "rb") as f:
        header = bytearray()
        while True:
            c = f.read(1)
            if not c:
                raise ValueError(f"truncated FGRID header in {filename}")
            if c == b"\n":
                break
            header.extend(c)
            if len(header) > 256:
                raise ValueError(f"not an FGRID file: {filename}")
        parts = header.decode("ascii").split()
        if len(parts) != 6 or parts[0] != "FGRID":
            raise ValueError(f"not an FGRID file: {filename}")
        width, height = int(parts[1]), int(parts[2])
        resolution = float(parts[3])
        origin = (float(parts[4]), float(parts[5]))
        raw = f.read(4 * width * height)
        if len(raw) != 4 * width * height:
            raise ValueError(f"truncated FGRID data in {filename}")
        values = np.frombuffer(raw, dtype="<f4").reshape(height, width)
    return FloatGrid(width, height, resolution, origin, values)


# ---------------------------------------------------------------------------
# PGM (P5) export, visualization only


def save_pgm(grid: FloatGrid, filename) -> None:
    vals = np.clip(grid.values, 0.0, 1.0)
    img = np.rint(vals * 255.0).astype(np.uint8)
    img = img[::-1]  # row 0 holds minimum y; images draw top row first
    with open(filename, "wb") as f:
        f.write(f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii"))
        f.write(img.tobytes())
