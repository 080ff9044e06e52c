"""Shared geometric types, angle arithmetic, and seeded random streams.

Conventions used across the whole stack:

* angles live in (-pi, pi], left-positive steering
* vehicle frame is x-forward / y-left, pose reference point is the rear axle
* every stochastic component draws from an explicitly passed RandomStream
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


def normalize_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    if not math.isfinite(a):
        raise ValueError(f"angle must be finite, got {a!r}")
    r = math.fmod(a, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    elif r > math.pi:
        r -= TWO_PI
    return r


@dataclass(frozen=True)
class Pose2D:
    """Planar pose: position in meters, heading in radians, world frame."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("pose position must be finite")
        object.__setattr__(self, "theta", normalize_angle(self.theta))


def pose_compose(a: Pose2D, b: Pose2D) -> Pose2D:
    """Rigid-body composition a (+) b, with b expressed in a's frame."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    return Pose2D(
        a.x + c * b.x - s * b.y,
        a.y + s * b.x + c * b.y,
        normalize_angle(a.theta + b.theta),
    )


def pose_inverse(p: Pose2D) -> Pose2D:
    """Inverse pose: pose_compose(p, pose_inverse(p)) is the identity."""
    c, s = math.cos(p.theta), math.sin(p.theta)
    return Pose2D(-(c * p.x + s * p.y), -(-s * p.x + c * p.y), -p.theta)


@dataclass(frozen=True)
class AckermannDrive:
    """Drive command: signed speed (m/s) and steering angle (rad, left positive)."""

    speed: float = 0.0
    steering_angle: float = 0.0

    def clamped(self, params: "VehicleParams") -> "AckermannDrive":
        return AckermannDrive(
            min(max(self.speed, -params.speed_limit), params.speed_limit),
            min(max(self.steering_angle, -params.steering_limit), params.steering_limit),
        )


@dataclass(frozen=True)
class VehicleParams:
    """Geometry and actuation limits of a 1/10-scale Ackermann chassis."""

    wheelbase: float = 0.33
    footprint_length: float = 0.44
    footprint_width: float = 0.28
    steering_limit: float = 0.34
    speed_limit: float = 2.0
    # rear axle sits this far from the rear edge of the footprint
    rear_overhang: float = 0.05

    def __post_init__(self):
        for name in ("wheelbase", "footprint_length", "footprint_width",
                     "steering_limit", "speed_limit"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class RandomStream:
    """Seeded PRNG wrapper around numpy's PCG64.

    Same seed + same draw sequence gives identical outputs. Streams are
    single-owner; derive independent children with :meth:`child` instead of
    sharing one generator between components.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.gen = np.random.Generator(np.random.PCG64(self.seed))

    def child(self, name: str) -> "RandomStream":
        """Deterministically derive an independent stream keyed by name."""
        digest = hashlib.sha256(f"{self.seed}/{name}".encode()).digest()
        return RandomStream(int.from_bytes(digest[:8], "little"))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size)


@dataclass
class StackConfig:
    """Flat configuration bag for the full stack; every field has a default
    matching the documented module defaults and can be overridden from the
    YAML config file or CLI flags."""

    vehicle: VehicleParams = field(default_factory=VehicleParams)
    # simulator
    sim_dt: float = 0.05
    speed_noise_sigma: float = 0.05      # multiplicative, N(1, sigma)
    steer_noise_sigma: float = 0.02      # additive, rad
    # scanner
    beam_count: int = 720
    angle_min: float = -math.pi
    angle_max: float = math.pi - TWO_PI / 720
    range_min: float = 0.02
    range_max: float = 10.0
    range_noise_sigma: float = 0.0
    scan_period_ticks: int = 2           # scan/MCL/control at sim rate / this
    # localization
    particle_count: int = 2000
    sigma_hit: float = 0.1
    z_hit: float = 0.85
    z_rand: float = 0.15
    beam_stride: int = 24
    ess_threshold_ratio: float = 0.5
    # controller
    rollout_count: int = 31
    horizon_steps: int = 30
    control_dt: float = 0.1
    v_nominal: float = 1.0
    w_goal: float = 1.0
    w_collision: float = 1e4
    # lighter steering penalty than the CostWeights dataclass default:
    # at 0.2 the steer term under-damps path tracking at v_nominal,
    # leaving the car orbiting goals it approaches with lateral error
    w_steer: float = 0.1
    goal_tolerance: float = 0.3
    # carrot distance matches the rollout horizon reach (30 x 0.1 s at
    # 1 m/s) so the final-pose cost can actually land on the carrot
    lookahead: float = 3.0
    # planning-only footprint inflation; sized so planned paths keep
    # obstacles outside the safety controller's stopping cone at v_nominal
    plan_margin: float = 0.55
    # safety
    ttc_threshold: float = 0.7
    cone_half_angle: float = 0.5
    standoff: float = 0.25
    # mux / ESC
    teleop_priority: int = 30
    safety_priority: int = 20
    autonomous_priority: int = 10
    teleop_timeout: float = 0.3
    safety_timeout: float = 0.3
    autonomous_timeout: float = 0.5
    accel_max: float = 2.0
    steer_rate_max: float = 3.0
    erpm_gain: float = 4600.0
    erpm_offset: float = 0.0
    servo_gain: float = -1.21
    servo_offset: float = 0.53
    erpm_limit: float = 20000.0
    # telemetry
    snapshot_rate: float = 20.0
    wire_particle_cap: int = 256
