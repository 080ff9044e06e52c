"""Monte Carlo localization: particle filter over an occupancy grid.

Sensor scoring uses a likelihood field (distance to the nearest occupied
cell, precomputed once per map), weights are accumulated in log space, and
resampling is systematic (low-variance) gated by effective sample size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import kernels
from .core import AckermannDrive, Pose2D, RandomStream, VehicleParams
from .mapio import FREE, OccupancyGrid
from .sim import LaserScan, NoiseParams


@dataclass(frozen=True)
class SensorModelParams:
    sigma_hit: float = 0.1
    z_hit: float = 0.85
    z_rand: float = 0.15
    beam_stride: int = 24

    def __post_init__(self):
        if abs(self.z_hit + self.z_rand - 1.0) > 1e-9:
            raise ValueError("z_hit + z_rand must equal 1")
        if self.sigma_hit <= 0:
            raise ValueError("sigma_hit must be positive")
        if self.beam_stride < 1:
            raise ValueError("beam_stride must be >= 1")


@dataclass
class ParticleSet:
    """Weighted pose hypotheses as parallel arrays (x, y, theta, w)."""

    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    weights: np.ndarray
    degenerate: bool = field(default=False, compare=False)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def poses(self) -> np.ndarray:
        return np.stack([self.x, self.y, self.theta], axis=1)


class InitializationError(Exception):
    pass


def initialize(grid: OccupancyGrid, n: int, rng: RandomStream,
               around: Pose2D | None = None,
               sigma_xy: float = 0.0, sigma_theta: float = 0.0) -> ParticleSet:
    """Spawn a particle set, either globally over free space or as a
    Gaussian cloud around a pose (resampling draws landing on non-free cells)."""
    if n < 1:
        raise ValueError("need at least one particle")
    free_j, free_i = np.nonzero(grid.cells == FREE)
    if free_i.size == 0:
        raise InitializationError("map has no free cells")

    if around is None:
        idx = rng.integers(0, free_i.size, n)
        # uniform position within each chosen free cell
        gx = (free_i[idx] + rng.uniform(0.0, 1.0, n)) * grid.resolution
        gy = (free_j[idx] + rng.uniform(0.0, 1.0, n)) * grid.resolution
        o = grid.origin
        c, s = math.cos(o.theta), math.sin(o.theta)
        x = o.x + c * gx - s * gy
        y = o.y + s * gx + c * gy
        theta = rng.uniform(-math.pi, math.pi, n)
    else:
        x = np.empty(n)
        y = np.empty(n)
        theta = np.empty(n)
        filled = 0
        attempts = 0
        while filled < n:
            attempts += 1
            if attempts > 1000:
                raise InitializationError(
                    "could not place particles on free cells around the pose")
            m = n - filled
            cx = around.x + rng.normal(0.0, sigma_xy, m) if sigma_xy > 0 else np.full(m, around.x)
            cy = around.y + rng.normal(0.0, sigma_xy, m) if sigma_xy > 0 else np.full(m, around.y)
            ct = around.theta + (rng.normal(0.0, sigma_theta, m) if sigma_theta > 0 else 0.0)
            ok = np.array([grid.world_to_grid(a, b) is not None
                           and grid.cells[grid.world_to_grid(a, b)[1],
                                          grid.world_to_grid(a, b)[0]] == FREE
                           for a, b in zip(cx, cy)])
            k = int(ok.sum())
            x[filled:filled + k] = cx[ok]
            y[filled:filled + k] = cy[ok]
            theta[filled:filled + k] = np.atleast_1d(ct)[ok] if sigma_theta > 0 else around.theta
            filled += k
    theta = _wrap(np.asarray(theta, dtype=np.float64))
    return ParticleSet(np.asarray(x, dtype=np.float64),
                       np.asarray(y, dtype=np.float64),
                       theta, np.full(n, 1.0 / n))


def _wrap(theta: np.ndarray) -> np.ndarray:
    r = np.fmod(theta, 2 * np.pi)
    r = np.where(r <= -np.pi, r + 2 * np.pi, r)
    return np.where(r > np.pi, r - 2 * np.pi, r)


def motion_update(ps: ParticleSet, cmd: AckermannDrive, dt: float,
                  params: VehicleParams, noise: NoiseParams,
                  rng: RandomStream) -> ParticleSet:
    """Advance every particle with independently perturbed (v, delta)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = ps.n
    v = np.full(n, cmd.speed)
    delta = np.full(n, cmd.steering_angle)
    if noise.speed_sigma > 0:
        v = v * rng.normal(1.0, noise.speed_sigma, n)
    if noise.steer_sigma > 0:
        delta = delta + rng.normal(0.0, noise.steer_sigma, n)
    delta = np.clip(delta, -params.steering_limit, params.steering_limit)
    x, y, theta = kernels.step_kinematics_batch(
        ps.x, ps.y, ps.theta, v, delta, dt, params.wheelbase)
    return ParticleSet(x, y, theta, ps.weights)


class DistanceField:
    """Per-cell Euclidean distance (m) to the nearest Occupied cell."""

    def __init__(self, grid: OccupancyGrid):
        occ = grid.occupied_mask()
        if occ.any():
            # exact two-pass EDT; sampling converts cell units to meters
            self.meters = ndimage.distance_transform_edt(
                ~occ, sampling=grid.resolution)
        else:
            self.meters = np.full(occ.shape, np.inf)
        self.grid = grid


def build_distance_field(grid: OccupancyGrid) -> DistanceField:
    return DistanceField(grid)


def sensor_update(ps: ParticleSet, scan: LaserScan, grid: OccupancyGrid,
                  smp: SensorModelParams, dfield: DistanceField) -> ParticleSet:
    """Reweight particles by likelihood-field scan scoring.

    Every beam_stride-th beam is scored; beams at the no-return sentinel
    (range_max) are skipped. Log weights are max-shifted before
    exponentiation; a full underflow resets to uniform weights and flags
    the set as degenerate."""
    sp = scan.params
    bearings = sp.bearings()[::smp.beam_stride]
    ranges = np.asarray(scan.ranges)[::smp.beam_stride]
    valid = ranges < sp.range_max - 1e-9
    bearings, ranges = bearings[valid], ranges[valid]

    logw = np.log(np.maximum(ps.weights, 1e-300))
    if bearings.size > 0:
        o = grid.origin
        logw = logw + kernels.scan_loglik(
            dfield.meters, ps.x, ps.y, ps.theta, bearings, ranges,
            o.x, o.y, math.cos(o.theta), math.sin(o.theta),
            grid.resolution, smp.sigma_hit, smp.z_hit, smp.z_rand,
            sp.range_max)
    peak = logw.max()
    if not np.isfinite(peak):
        return ParticleSet(ps.x, ps.y, ps.theta,
                           np.full(ps.n, 1.0 / ps.n), degenerate=True)
    shifted = np.exp(logw - peak)
    total = shifted.sum()
    if not np.isfinite(total) or total <= 0.0:
        return ParticleSet(ps.x, ps.y, ps.theta,
                           np.full(ps.n, 1.0 / ps.n), degenerate=True)
    return ParticleSet(ps.x, ps.y, ps.theta, shifted / total)


def should_resample(ps: ParticleSet, threshold_ratio: float = 0.5) -> bool:
    """ESS gate: resample iff 1/sum(w^2) < threshold_ratio * N."""
    ess = 1.0 / np.square(ps.weights).sum()
    return bool(ess < threshold_ratio * ps.n)


def resample(ps: ParticleSet, rng: RandomStream) -> ParticleSet:
    """Systematic (low-variance) resampling with a single uniform draw."""
    n = ps.n
    u = rng.uniform(0.0, 1.0 / n)
    positions = u + np.arange(n) / n
    cum = np.cumsum(ps.weights)
    cum[-1] = 1.0  # guard against rounding shortfall
    idx = np.searchsorted(cum, positions, side="right")
    idx = np.minimum(idx, n - 1)
    return ParticleSet(ps.x[idx].copy(), ps.y[idx].copy(),
                       ps.theta[idx].copy(), np.full(n, 1.0 / n))


def estimate(ps: ParticleSet) -> Pose2D:
    """Weighted mean position and circular-mean heading."""
    w = ps.weights
    return Pose2D(float(w @ ps.x), float(w @ ps.y),
                  math.atan2(float(w @ np.sin(ps.theta)),
                             float(w @ np.cos(ps.theta))))
