"""gridcar: deterministic 2D Ackermann racecar simulator and navigation
stack with Monte Carlo localization, receding-horizon control, a priority
command mux, and live WebSocket teleoperation."""

from .core import AckermannDrive, Pose2D, RandomStream, StackConfig, VehicleParams
from .kernels import BACKEND as KERNEL_BACKEND
from .mapio import OccupancyGrid, load_map

__all__ = [
    "AckermannDrive",
    "KERNEL_BACKEND",
    "OccupancyGrid",
    "Pose2D",
    "RandomStream",
    "StackConfig",
    "VehicleParams",
    "load_map",
]

__version__ = "0.1.0"
