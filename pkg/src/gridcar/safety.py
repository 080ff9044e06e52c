"""Backup safety controller: stateless time-to-collision stop injection.

Watches laser scans and the latest mux-selected command; while the minimum
time to collision inside the forward cone is below threshold it emits stop
commands at safety priority. Release is by staleness: once it falls silent
the mux times the safety source out. Reverse motion is unmonitored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import AckermannDrive, normalize_angle
from .mux_esc import StampedCommand
from .sim import LaserScan

SAFETY_SOURCE_ID = "safety"


@dataclass(frozen=True)
class SafetyParams:
    ttc_threshold: float = 0.7
    cone_half_angle: float = 0.5
    standoff: float = 0.25

    def __post_init__(self):
        if min(self.ttc_threshold, self.cone_half_angle, self.standoff) <= 0:
            raise ValueError("safety parameters must be positive")


def min_ttc(scan: LaserScan, cmd: AckermannDrive, sp: SafetyParams) -> float:
    """Minimum time to collision over beams inside the commanded cone.

    The cone is centered on the commanded steering direction; returns inf
    for non-forward motion or when no beam falls inside the cone."""
    if cmd.speed <= 0:
        return math.inf
    best = math.inf
    bearings = scan.params.bearings()
    sentinel = scan.params.range_max - 1e-9
    for bearing, rng in zip(bearings, scan.ranges):
        if rng >= sentinel:  # no return on this beam
            continue
        if abs(normalize_angle(bearing - cmd.steering_angle)) > sp.cone_half_angle:
            continue
        ttc = max(rng - sp.standoff, 0.0) / cmd.speed
        if ttc < best:
            best = ttc
    return best


def safety_tick(scan: LaserScan, selected_cmd: AckermannDrive,
                sp: SafetyParams) -> StampedCommand | None:
    """Emit a stop at safety priority iff min_ttc is below threshold."""
    if min_ttc(scan, selected_cmd, sp) < sp.ttc_threshold:
        return StampedCommand(SAFETY_SOURCE_ID, scan.stamp,
                              AckermannDrive(0.0, 0.0))
    return None
