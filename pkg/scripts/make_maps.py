#!/usr/bin/env python3
"""Regenerate the reference maps under maps/.

Both maps are synthetic: a 10 x 8 m room with interior landmarks for
localization benchmarks, and a 12 x 5.2 m corridor with a mid-passage
obstacle for end-to-end navigation runs. The passage past the obstacle
is kept wider than the safety controller's stopping envelope at cruise
speed so the planner's avoidance path does not trip emergency stops.
"""

from pathlib import Path

import numpy as np

from gridcar.core import Pose2D
from gridcar.mapio import OCCUPIED, grid_from_array, save_map

RES = 0.05
MAPS = Path(__file__).resolve().parent.parent / "maps"


def blank(width_m: float, height_m: float) -> np.ndarray:
    cells = np.zeros((round(height_m / RES), round(width_m / RES)), np.uint8)
    cells[0, :] = cells[-1, :] = OCCUPIED
    cells[:, 0] = cells[:, -1] = OCCUPIED
    return cells


def fill(cells: np.ndarray, x0: float, y0: float, x1: float, y1: float) -> None:
    cells[round(y0 / RES):round(y1 / RES),
          round(x0 / RES):round(x1 / RES)] = OCCUPIED


def make_room() -> None:
    cells = blank(10.0, 8.0)
    # asymmetric landmarks, all well clear of the central figure-eight
    fill(cells, 1.8, 1.8, 2.4, 2.4)    # square pillar, lower left
    fill(cells, 8.2, 4.5, 8.6, 7.0)    # wall stub off the right wall
    fill(cells, 1.2, 6.4, 2.8, 6.8)    # shelf along the upper left
    save_map(grid_from_array(cells, RES, Pose2D()), MAPS / "room.yaml")


def make_corridor() -> None:
    cells = blank(12.0, 5.2)
    # block the lower half early in the corridor; passage stays on top,
    # leaving a long straight run-in to goals near the far end
    fill(cells, 4.0, 0.0, 4.8, 2.8)
    save_map(grid_from_array(cells, RES, Pose2D()), MAPS / "corridor.yaml")


if __name__ == "__main__":
    MAPS.mkdir(exist_ok=True)
    make_room()
    make_corridor()
    print(f"wrote maps to {MAPS}")
