import numpy as np
import pytest

from gridcar.core import Pose2D
from gridcar.mapio import FREE, OCCUPIED, OccupancyGrid, grid_from_array


def box_room(width_m: float, height_m: float, resolution: float,
             origin: Pose2D = Pose2D(), wall_cells: int = 1) -> np.ndarray:
    """Free interior with an occupied border, as a cell array."""
    w = int(round(width_m / resolution))
    h = int(round(height_m / resolution))
    cells = np.full((h, w), FREE, dtype=np.uint8)
    b = wall_cells
    cells[:b, :] = OCCUPIED
    cells[-b:, :] = OCCUPIED
    cells[:, :b] = OCCUPIED
    cells[:, -b:] = OCCUPIED
    return cells


def add_block(cells: np.ndarray, resolution: float,
              x0: float, y0: float, x1: float, y1: float) -> None:
    """Mark the axis-aligned rectangle [x0,x1) x [y0,y1) (meters, grid
    frame) occupied."""
    i0, i1 = int(round(x0 / resolution)), int(round(x1 / resolution))
    j0, j1 = int(round(y0 / resolution)), int(round(y1 / resolution))
    cells[j0:j1, i0:i1] = OCCUPIED


def room_grid(width_m: float, height_m: float, resolution: float,
              origin: Pose2D = Pose2D()) -> OccupancyGrid:
    return grid_from_array(box_room(width_m, height_m, resolution), resolution,
                           origin)


@pytest.fixture
def small_room():
    """6x4 m room, 0.05 m resolution, walls one cell thick."""
    return room_grid(6.0, 4.0, 0.05)
