"""Priority command multiplexer and ESC-side command conditioning.

Commands from teleop, safety, and the autonomous controller are arbitrated
by priority with per-source staleness timeouts; the winning command is
slew-limited by a single post-mux smoother and mapped linearly to motor
ERPM and a [0, 1] servo position.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass

from .core import AckermannDrive

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CommandSource:
    id: str
    priority: int
    timeout: float

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass(frozen=True)
class StampedCommand:
    source_id: str
    stamp: float
    cmd: AckermannDrive


@dataclass(frozen=True)
class SmootherParams:
    accel_max: float = 2.0
    steer_rate_max: float = 3.0

    def __post_init__(self):
        if self.accel_max <= 0 or self.steer_rate_max <= 0:
            raise ValueError("slew limits must be positive")


@dataclass(frozen=True)
class EscCalibration:
    erpm_gain: float = 4600.0
    erpm_offset: float = 0.0
    servo_gain: float = -1.21
    servo_offset: float = 0.53
    erpm_limit: float = 20000.0


@dataclass(frozen=True)
class ActuatorCommand:
    motor_erpm: float
    servo_position: float


def mux_select(latest: dict[str, StampedCommand], now: float,
               sources: dict[str, CommandSource]) -> tuple[AckermannDrive, str | None]:
    """Pick the freshest-enough command of highest priority.

    Returns (command, winning source id); (stop, None) when no source is
    fresh. Pure function of its arguments."""
    best: CommandSource | None = None
    for sid, stamped in latest.items():
        src = sources.get(sid)
        if src is None:
            continue
        if now - stamped.stamp > src.timeout:
            continue
        if best is None or src.priority > best.priority:
            best = src
    if best is None:
        return AckermannDrive(0.0, 0.0), None
    return latest[best.id].cmd, best.id


def smooth(prev: AckermannDrive, target: AckermannDrive, dt: float,
           sp: SmootherParams) -> AckermannDrive:
    """Move toward the target at most accel_max / steer_rate_max per second;
    reaches the target exactly once within the per-tick budget."""
    if dt <= 0:
        raise ValueError("dt must be positive")

    def toward(cur, tgt, rate):
        budget = rate * dt
        d = tgt - cur
        if abs(d) <= budget:
            return tgt
        return cur + (budget if d > 0 else -budget)

    return AckermannDrive(
        toward(prev.speed, target.speed, sp.accel_max),
        toward(prev.steering_angle, target.steering_angle, sp.steer_rate_max))


def to_actuator(cmd: AckermannDrive, cal: EscCalibration) -> ActuatorCommand:
    erpm = cal.erpm_gain * cmd.speed + cal.erpm_offset
    erpm = min(max(erpm, -cal.erpm_limit), cal.erpm_limit)
    servo = cal.servo_gain * cmd.steering_angle + cal.servo_offset
    return ActuatorCommand(erpm, min(max(servo, 0.0), 1.0))


def from_actuator(a: ActuatorCommand, cal: EscCalibration) -> AckermannDrive:
    """Inverse of to_actuator on the non-clamped region; a clamped servo
    reads back as the steering angle at the corresponding limit."""
    if cal.erpm_gain == 0 or cal.servo_gain == 0:
        raise ValueError("calibration gains must be non-zero")
    return AckermannDrive((a.motor_erpm - cal.erpm_offset) / cal.erpm_gain,
                          (a.servo_position - cal.servo_offset) / cal.servo_gain)


class CommandMux:
    """Thread-safe holder of the latest command per source.

    Bus callbacks write entries, the ESC tick reads a consistent snapshot.
    Commands from unregistered sources are rejected with a logged protocol
    error, never an exception."""

    def __init__(self, sources: list[CommandSource]):
        ids = [s.id for s in sources]
        prios = [s.priority for s in sources]
        if len(set(ids)) != len(ids):
            raise ValueError("source ids must be unique")
        if len(set(prios)) != len(prios):
            raise ValueError("source priorities must be unique")
        self.sources = {s.id: s for s in sources}
        self._latest: dict[str, StampedCommand] = {}
        self._lock = threading.Lock()

    def offer(self, stamped: StampedCommand) -> bool:
        if stamped.source_id not in self.sources:
            log.error("command from unregistered source %r dropped",
                      stamped.source_id)
            return False
        with self._lock:
            self._latest[stamped.source_id] = stamped
        return True

    def select(self, now: float,
               exclude: tuple[str, ...] = ()) -> tuple[AckermannDrive, str | None]:
        with self._lock:
            snapshot = dict(self._latest)
        if exclude:
            snapshot = {sid: st for sid, st in snapshot.items()
                        if sid not in exclude}
        return mux_select(snapshot, now, self.sources)
