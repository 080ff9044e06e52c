"""Occupancy grid data model and PGM+YAML map loading.

The on-disk format is the standard robotics map interchange pair: an 8-bit
PGM raster (P5 binary or P2 ASCII) plus a YAML file with keys
``image, resolution, origin, negate, occupied_thresh, free_thresh``.

Image row 0 is the TOP of the map: world y decreases with image row, so the
cell array here is stored bottom-up (row 0 = smallest y) after a vertical
flip at load time. ``origin`` in the YAML is the world pose of the corner of
cell (0, 0), yaw included.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .core import Pose2D

FREE, OCCUPIED, UNKNOWN = 0, 1, 2


class MapLoadError(Exception):
    pass


@dataclass(frozen=True)
class OccupancyGrid:
    """Immutable occupancy raster.

    ``cells`` is an (height, width) uint8 array of FREE/OCCUPIED/UNKNOWN,
    row 0 at the grid-frame origin (cells[j, i] covers grid coordinates
    [i, i+1) x [j, j+1) in cell units).
    """

    width: int
    height: int
    resolution: float
    origin: Pose2D
    cells: np.ndarray

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.cells.shape != (self.height, self.width):
            raise ValueError("cell array shape does not match width/height")
        self.cells.setflags(write=False)

    def world_to_grid(self, x: float, y: float) -> tuple[int, int] | None:
        """Cell (col, row) containing world point, or None if out of bounds."""
        c, s = math.cos(self.origin.theta), math.sin(self.origin.theta)
        dx, dy = x - self.origin.x, y - self.origin.y
        gx = (c * dx + s * dy) / self.resolution
        gy = (-s * dx + c * dy) / self.resolution
        i, j = math.floor(gx), math.floor(gy)
        if 0 <= i < self.width and 0 <= j < self.height:
            return i, j
        return None

    def grid_to_world(self, i: int, j: int) -> tuple[float, float]:
        """World coordinates of the center of cell (i, j)."""
        gx, gy = (i + 0.5) * self.resolution, (j + 0.5) * self.resolution
        c, s = math.cos(self.origin.theta), math.sin(self.origin.theta)
        return self.origin.x + c * gx - s * gy, self.origin.y + s * gx + c * gy

    def is_occupied(self, cell: tuple[int, int] | None) -> bool:
        """Occupied test; out-of-bounds and Unknown both count as occupied."""
        if cell is None:
            return True
        i, j = cell
        if not (0 <= i < self.width and 0 <= j < self.height):
            return True
        return self.cells[j, i] != FREE

    def occupied_mask(self) -> np.ndarray:
        return self.cells == OCCUPIED

    def blocking_mask(self, unknown_blocks: bool) -> np.ndarray:
        """Boolean (H, W) mask of cells that stop rays / block motion."""
        if unknown_blocks:
            return self.cells != FREE
        return self.cells == OCCUPIED


def _read_pgm(path: str | os.PathLike) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise MapLoadError(f"cannot read PGM file {path}: {e}") from e

    # header tokens with '#' comments stripped; P5 pixel data follows the
    # single whitespace byte after maxval
    pos = 0
    tokens = []
    while len(tokens) < 4:
        if pos >= len(data):
            raise MapLoadError(f"{path}: truncated PGM header")
        ch = data[pos:pos + 1]
        if ch == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
                pos += 1
            tokens.append(data[start:pos])
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise MapLoadError(f"{path}: not a PGM file (magic {magic!r})")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as e:
        raise MapLoadError(f"{path}: malformed PGM header") from e
    if maxval != 255:
        raise MapLoadError(f"{path}: only 8-bit PGM supported (maxval {maxval})")

    if magic == b"P5":
        pos += 1  # single whitespace separator
        pixels = np.frombuffer(data, dtype=np.uint8, offset=pos)
        if pixels.size < width * height:
            raise MapLoadError(f"{path}: pixel data shorter than {width}x{height}")
        pixels = pixels[: width * height]
    else:
        try:
            values = [int(t) for t in data[pos:].split()]
        except ValueError as e:
            raise MapLoadError(f"{path}: malformed ASCII pixel data") from e
        if len(values) != width * height:
            raise MapLoadError(
                f"{path}: expected {width * height} pixels, got {len(values)}")
        pixels = np.asarray(values, dtype=np.uint8)
    return pixels.reshape(height, width)


def load_map(yaml_path: str | os.PathLike, pgm_path: str | os.PathLike | None = None) -> OccupancyGrid:
    """Load an occupancy grid from a YAML metadata file and its PGM raster.

    If ``pgm_path`` is omitted it is resolved from the YAML ``image`` key,
    relative to the YAML file's directory.
    """
    try:
        with open(yaml_path) as f:
            meta = yaml.safe_load(f)
    except OSError as e:
        raise MapLoadError(f"cannot read map metadata {yaml_path}: {e}") from e
    if not isinstance(meta, dict):
        raise MapLoadError(f"{yaml_path}: metadata is not a mapping")
    for key in ("resolution", "origin", "negate", "occupied_thresh", "free_thresh"):
        if key not in meta:
            raise MapLoadError(f"{yaml_path}: missing key {key!r}")
    if pgm_path is None:
        if "image" not in meta:
            raise MapLoadError(f"{yaml_path}: missing key 'image'")
        pgm_path = Path(yaml_path).parent / meta["image"]

    image = _read_pgm(pgm_path)
    resolution = float(meta["resolution"])
    ox, oy, oyaw = (float(v) for v in meta["origin"])
    negate = int(meta["negate"])
    occ_t = float(meta["occupied_thresh"])
    free_t = float(meta["free_thresh"])

    # image row 0 is the top of the map; flip so cell row 0 is at origin
    image = image[::-1, :]
    p = image.astype(np.float64) / 255.0
    if not negate:
        p = 1.0 - p
    cells = np.full(image.shape, UNKNOWN, dtype=np.uint8)
    cells[p > occ_t] = OCCUPIED
    cells[p < free_t] = FREE

    h, w = image.shape
    return OccupancyGrid(w, h, resolution, Pose2D(ox, oy, oyaw), cells)


def grid_from_array(cells: np.ndarray, resolution: float,
                    origin: Pose2D = Pose2D()) -> OccupancyGrid:
    """Build a grid directly from a (H, W) cell-state array."""
    cells = np.ascontiguousarray(cells, dtype=np.uint8)
    h, w = cells.shape
    return OccupancyGrid(w, h, resolution, origin, cells)


def save_map(grid: OccupancyGrid, yaml_path: str | os.PathLike,
             image_name: str | None = None) -> None:
    """Write a grid back out as a PGM+YAML pair (P5, standard thresholds)."""
    yaml_path = Path(yaml_path)
    if image_name is None:
        image_name = yaml_path.stem + ".pgm"
    gray = np.full((grid.height, grid.width), 205, dtype=np.uint8)
    gray[grid.cells == FREE] = 254
    gray[grid.cells == OCCUPIED] = 0
    gray = gray[::-1, :]
    pgm = b"P5\n%d %d\n255\n" % (grid.width, grid.height) + gray.tobytes()
    (yaml_path.parent / image_name).write_bytes(pgm)
    meta = {
        "image": image_name,
        "resolution": float(grid.resolution),
        "origin": [float(grid.origin.x), float(grid.origin.y), float(grid.origin.theta)],
        "negate": 0,
        "occupied_thresh": 0.65,
        "free_thresh": 0.196,
    }
    yaml_path.write_text(yaml.safe_dump(meta, sort_keys=False))
