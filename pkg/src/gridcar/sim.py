"""Deterministic fixed-step vehicle simulator.

Exact-arc kinematic bicycle integration, LIDAR simulation by grid ray
casting, bump-sensor simulation by footprint collision, and configurable
actuation/sensor noise. The pose reference point is the rear axle; the
rectangular footprint extends ``rear_overhang`` behind it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .core import AckermannDrive, Pose2D, RandomStream, VehicleParams, normalize_angle
from .mapio import OccupancyGrid


@dataclass(frozen=True)
class ScanParams:
    beam_count: int = 720
    angle_min: float = -math.pi
    angle_max: float = math.pi - 2 * math.pi / 720
    range_min: float = 0.02
    range_max: float = 10.0
    range_noise_sigma: float = 0.0

    def __post_init__(self):
        if self.beam_count < 1:
            raise ValueError("beam_count must be >= 1")
        if not self.angle_min < self.angle_max:
            raise ValueError("angle_min must be < angle_max")
        if not 0 <= self.range_min < self.range_max:
            raise ValueError("need 0 <= range_min < range_max")

    def bearings(self) -> np.ndarray:
        """Per-beam bearings in the scanner frame."""
        if self.beam_count == 1:
            return np.array([self.angle_min])
        return self.angle_min + np.arange(self.beam_count) * (
            (self.angle_max - self.angle_min) / (self.beam_count - 1))


@dataclass(frozen=True)
class LaserScan:
    stamp: float
    ranges: np.ndarray
    params: ScanParams


@dataclass(frozen=True)
class NoiseParams:
    """Actuation noise: speed is scaled by N(1, sigma_v), steering gets an
    additive N(0, sigma_delta) term."""

    speed_sigma: float = 0.05
    steer_sigma: float = 0.02


@dataclass(frozen=True)
class SimState:
    pose: Pose2D = Pose2D()
    commanded: AckermannDrive = AckermannDrive()
    time: float = 0.0
    collided: bool = False


def step_kinematics(pose: Pose2D, cmd: AckermannDrive, dt: float,
                    params: VehicleParams) -> Pose2D:
    """One exact constant-command arc step of the kinematic bicycle model."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    v, delta = cmd.speed, cmd.steering_angle
    tan_d = math.tan(delta)
    if abs(tan_d) < 1e-9:
        return Pose2D(pose.x + v * dt * math.cos(pose.theta),
                      pose.y + v * dt * math.sin(pose.theta),
                      pose.theta)
    beta = (v * dt / params.wheelbase) * tan_d
    radius = params.wheelbase / tan_d
    return Pose2D(
        pose.x + radius * (math.sin(pose.theta + beta) - math.sin(pose.theta)),
        pose.y + radius * (math.cos(pose.theta) - math.cos(pose.theta + beta)),
        normalize_angle(pose.theta + beta))


def _grid_frame(grid: OccupancyGrid):
    o = grid.origin
    return o.x, o.y, math.cos(o.theta), math.sin(o.theta)


def raycast(grid: OccupancyGrid, x: float, y: float, bearing: float,
            range_max: float, unknown_blocks: bool = False) -> float:
    """Distance (m) to the first blocking cell boundary along one ray."""
    return raycast_many(grid, x, y, np.array([bearing]), range_max,
                        unknown_blocks)[0]


def raycast_many(grid: OccupancyGrid, x: float, y: float,
                 bearings: np.ndarray, range_max: float,
                 unknown_blocks: bool = False) -> np.ndarray:
    """Batch ray cast from a single origin; bearings are world-frame."""
    gx0, gy0, c, s = _grid_frame(grid)
    dx, dy = x - gx0, y - gy0
    ox = (c * dx + s * dy) / grid.resolution
    oy = (-s * dx + c * dy) / grid.resolution
    # rotate ray directions into the grid frame
    wx, wy = np.cos(bearings), np.sin(bearings)
    dirx = c * wx + s * wy
    diry = -s * wx + c * wy
    n = bearings.shape[0]
    dist = kernels.raycast_batch(
        grid.blocking_mask(unknown_blocks),
        np.full(n, ox), np.full(n, oy), dirx, diry,
        range_max / grid.resolution)
    return dist * grid.resolution


def simulate_scan(grid: OccupancyGrid, pose: Pose2D, sp: ScanParams,
                  rng: RandomStream | None = None) -> LaserScan:
    """Simulate one LIDAR sweep from the scanner mounted at the pose origin.

    With range_noise_sigma == 0 the result is a pure function of
    (grid, pose, sp). Unknown cells do not block rays (free-space
    convention for localization scoring)."""
    bearings = pose.theta + sp.bearings()
    ranges = raycast_many(grid, pose.x, pose.y, bearings, sp.range_max,
                          unknown_blocks=False)
    if sp.range_noise_sigma > 0:
        if rng is None:
            raise ValueError("noisy scan needs a RandomStream")
        ranges = ranges + rng.normal(0.0, sp.range_noise_sigma, sp.beam_count)
    ranges = np.clip(ranges, sp.range_min, sp.range_max)
    return LaserScan(stamp=0.0, ranges=ranges, params=sp)


def footprint_samples(params: VehicleParams, resolution: float) -> tuple[np.ndarray, np.ndarray]:
    """Vehicle-frame sample lattice covering the footprint at <= res/2 pitch."""
    x_lo = -params.rear_overhang
    x_hi = params.footprint_length - params.rear_overhang
    half_w = params.footprint_width / 2
    pitch = resolution / 2
    nx = max(2, int(math.ceil((x_hi - x_lo) / pitch)) + 1)
    ny = max(2, int(math.ceil(params.footprint_width / pitch)) + 1)
    xs = np.linspace(x_lo, x_hi, nx)
    ys = np.linspace(-half_w, half_w, ny)
    gx, gy = np.meshgrid(xs, ys)
    return gx.ravel(), gy.ravel()


def check_collision(grid: OccupancyGrid, pose: Pose2D,
                    params: VehicleParams) -> bool:
    """True iff the footprint overlaps an Occupied/Unknown/out-of-map cell."""
    sx, sy = footprint_samples(params, grid.resolution)
    gx0, gy0, c, s = _grid_frame(grid)
    return bool(kernels.footprint_collisions(
        grid.blocking_mask(unknown_blocks=True),
        np.array([pose.x]), np.array([pose.y]), np.array([pose.theta]),
        sx, sy, gx0, gy0, c, s, grid.resolution)[0])


def sim_tick(state: SimState, cmd: AckermannDrive, dt: float,
             grid: OccupancyGrid, params: VehicleParams,
             noise: NoiseParams, rng: RandomStream) -> SimState:
    """Advance the simulator one fixed step.

    Actuation noise perturbs the command, the exact-arc integrator steps the
    pose, and a footprint collision stalls the car at the pre-step pose and
    latches the bump sensor."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    cmd = cmd.clamped(params)
    v = cmd.speed
    delta = cmd.steering_angle
    if noise.speed_sigma > 0:
        v *= rng.normal(1.0, noise.speed_sigma)
    if noise.steer_sigma > 0:
        delta += rng.normal(0.0, noise.steer_sigma)
    delta = min(max(delta, -params.steering_limit), params.steering_limit)

    new_pose = step_kinematics(state.pose, AckermannDrive(v, delta), dt, params)
    collided = state.collided
    if check_collision(grid, new_pose, params):
        new_pose = state.pose
        collided = True
    return replace(state, pose=new_pose, commanded=cmd,
                   time=state.time + dt, collided=collided)
