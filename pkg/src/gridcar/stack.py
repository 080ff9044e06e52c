"""Full navigation stack wiring: fixed-step loop over
sensors -> localization -> safety -> control -> mux -> ESC -> simulator.

The loop advances in simulated time; ``realtime_factor`` only throttles the
wall clock. All randomness flows from one seed through named child streams,
so a (config, seed) pair fully determines every published frame.
"""

from __future__ import annotations

import dataclasses
import math
import time as _time
from dataclasses import dataclass, field

import numpy as np

from . import control, localization, mux_esc, safety, sim, wire
from .bus import Bus
from .core import AckermannDrive, Pose2D, RandomStream, StackConfig
from .mapio import OccupancyGrid

TELEOP_SOURCE_ID = "teleop"
AUTONOMOUS_SOURCE_ID = "autonomous"

TOPIC_SCAN = "/scan"
TOPIC_TELEOP = "/teleop/cmd"
TOPIC_GOAL = "/goal"
TOPIC_STATE = "/state"
TOPIC_MUX_OUT = "/mux/out"


def _round(v: float, nd: int) -> float:
    return round(float(v), nd)


@dataclass
class TickReport:
    """Per-tick ground-truth bookkeeping for CLI reports."""

    time: float
    pose: Pose2D
    estimate: Pose2D
    clearance: float
    min_ttc: float = math.inf


class NavigationStack:
    def __init__(self, grid: OccupancyGrid, config: StackConfig, seed: int,
                 start: Pose2D, bus: Bus | None = None,
                 init_sigma_xy: float = 0.5, init_sigma_theta: float = 0.2,
                 autonomous_enabled: bool = True,
                 safety_enabled: bool = True,
                 noise_enabled: bool = True):
        self.grid = grid
        self.cfg = config
        self.bus = bus if bus is not None else Bus()
        self.params = config.vehicle

        root = RandomStream(seed)
        self._rng_sim = root.child("sim")
        self._rng_scan = root.child("scan")
        self._rng_motion = root.child("mcl/motion")
        self._rng_resample = root.child("mcl/resample")

        self.noise = sim.NoiseParams(
            config.speed_noise_sigma if noise_enabled else 0.0,
            config.steer_noise_sigma if noise_enabled else 0.0)
        self.scan_params = sim.ScanParams(
            config.beam_count, config.angle_min, config.angle_max,
            config.range_min, config.range_max, config.range_noise_sigma)

        self.state = sim.SimState(pose=start)
        self.smoothed = AckermannDrive(0.0, 0.0)
        self.smoother = mux_esc.SmootherParams(config.accel_max,
                                               config.steer_rate_max)
        self.calibration = mux_esc.EscCalibration(
            config.erpm_gain, config.erpm_offset, config.servo_gain,
            config.servo_offset, config.erpm_limit)
        self.mux = mux_esc.CommandMux([
            mux_esc.CommandSource(TELEOP_SOURCE_ID, config.teleop_priority,
                                  config.teleop_timeout),
            mux_esc.CommandSource(safety.SAFETY_SOURCE_ID,
                                  config.safety_priority,
                                  config.safety_timeout),
            mux_esc.CommandSource(AUTONOMOUS_SOURCE_ID,
                                  config.autonomous_priority,
                                  config.autonomous_timeout),
        ])
        # scans originate at the rear axle but the bumper sits a front
        # overhang ahead of it; keep the standoff ahead of the bumper
        front_overhang = (self.params.footprint_length
                          - self.params.rear_overhang)
        self.safety_params = safety.SafetyParams(
            config.ttc_threshold, config.cone_half_angle,
            config.standoff + front_overhang)
        self.safety_enabled = safety_enabled
        self.autonomous_enabled = autonomous_enabled

        self.sensor_model = localization.SensorModelParams(
            config.sigma_hit, config.z_hit, config.z_rand, config.beam_stride)
        self.dfield = localization.build_distance_field(grid)
        self.particles = localization.initialize(
            grid, config.particle_count, root.child("mcl/init"),
            around=start, sigma_xy=init_sigma_xy,
            sigma_theta=init_sigma_theta)
        self.estimate = localization.estimate(self.particles)

        # planning uses an inflated footprint so trajectories keep a margin
        # against estimation error; the simulator checks the true footprint
        m = config.plan_margin
        self.plan_params = dataclasses.replace(
            self.params,
            footprint_length=self.params.footprint_length + 2 * m,
            footprint_width=self.params.footprint_width + 2 * m,
            rear_overhang=self.params.rear_overhang + m)
        self.library = control.build_library(
            self.params, config.rollout_count, config.horizon_steps,
            config.control_dt, config.v_nominal)
        # shorter-horizon variants for the terminal approach: a
        # constant-steering arc can only end on a goal at least as far
        # away as its reach, so the planner steps down to the library
        # whose reach best matches the remaining distance
        self.libraries = [self.library]
        steps = config.horizon_steps // 2
        while steps >= 4:
            self.libraries.append(control.build_library(
                self.params, config.rollout_count, steps,
                config.control_dt, config.v_nominal))
            steps //= 2
        self.weights = control.CostWeights(config.w_goal, config.w_collision,
                                           config.w_steer)

        self.goal: Pose2D | None = None
        self.path: list[Pose2D] | None = None
        self.done = False
        self.tick_index = 0
        self.last_scan: sim.LaserScan | None = None
        self.last_rollouts: list[control.Rollout] = []
        self.active_source: str | None = None
        self.command_log: list[mux_esc.StampedCommand] = []
        self.reports: list[TickReport] = []

        self.bus.subscribe(TOPIC_TELEOP, self._on_teleop,
                           mux_esc.StampedCommand)
        self.bus.subscribe(TOPIC_GOAL, self._on_goal, Pose2D)

    # bus callbacks (may run on the telemetry thread)

    def _on_teleop(self, stamped: mux_esc.StampedCommand) -> None:
        self.mux.offer(stamped)

    def _on_goal(self, goal: Pose2D) -> None:
        self.goal = goal
        self.path = None
        self.done = False

    @property
    def now(self) -> float:
        return self.state.time

    def set_goal(self, goal: Pose2D) -> None:
        self.goal = goal
        self.done = False

    def set_path(self, path: list[Pose2D]) -> None:
        self.path = path
        self.done = False

    def _offer(self, stamped: mux_esc.StampedCommand) -> None:
        self.mux.offer(stamped)
        self.command_log.append(stamped)

    def _clearance(self) -> float:
        p = self.state.pose
        sx, sy = sim.footprint_samples(self.params, self.grid.resolution)
        c, s = math.cos(p.theta), math.sin(p.theta)
        wx = p.x + c * sx - s * sy
        wy = p.y + s * sx + c * sy
        o = self.grid.origin
        oc, osn = math.cos(o.theta), math.sin(o.theta)
        gi = np.floor((oc * (wx - o.x) + osn * (wy - o.y)) / self.grid.resolution).astype(int)
        gj = np.floor((-osn * (wx - o.x) + oc * (wy - o.y)) / self.grid.resolution).astype(int)
        inb = (gi >= 0) & (gi < self.grid.width) & (gj >= 0) & (gj < self.grid.height)
        if not inb.all():
            return 0.0
        return float(self.dfield.meters[gj[inb], gi[inb]].min())

    def tick(self) -> dict:
        """Advance one fixed step; returns the wire-format state frame."""
        cfg = self.cfg
        scan_tick = self.tick_index % cfg.scan_period_ticks == 0
        min_ttc_now = math.inf

        if scan_tick:
            scan = sim.simulate_scan(self.grid, self.state.pose,
                                     self.scan_params, self._rng_scan)
            scan = sim.LaserScan(self.now, scan.ranges, scan.params)
            self.last_scan = scan
            self.bus.publish(TOPIC_SCAN, scan)

            self.particles = localization.sensor_update(
                self.particles, scan, self.grid, self.sensor_model,
                self.dfield)
            if localization.should_resample(self.particles,
                                            cfg.ess_threshold_ratio):
                self.particles = localization.resample(self.particles,
                                                       self._rng_resample)
            self.estimate = localization.estimate(self.particles)

            if self.safety_enabled:
                min_ttc_now = safety.min_ttc(scan, self.smoothed,
                                             self.safety_params)
                # check the applied command and a probe at the highest
                # speed the car could reach before the next scan under the
                # pending intent (mux winner ignoring safety itself): this
                # keeps a stopped car from re-accelerating into an obstacle
                # faster than the scan rate can catch
                intent, _ = self.mux.select(self.now,
                                            exclude=(safety.SAFETY_SOURCE_ID,))
                probe_speed = min(
                    intent.speed,
                    self.smoothed.speed
                    + cfg.accel_max * cfg.sim_dt * cfg.scan_period_ticks)
                probe = AckermannDrive(probe_speed,
                                       self.smoothed.steering_angle)
                stop = (safety.safety_tick(scan, self.smoothed,
                                           self.safety_params)
                        or safety.safety_tick(scan, probe,
                                              self.safety_params))
                if stop is not None:
                    self._offer(stop)

            if self.autonomous_enabled and not self.done:
                goal = self.goal
                if self.path:
                    goal, self.done = control.next_waypoint(
                        self.path, self.estimate, cfg.lookahead,
                        cfg.goal_tolerance)
                elif goal is not None:
                    self.done = math.hypot(self.estimate.x - goal.x,
                                           self.estimate.y - goal.y) \
                        < cfg.goal_tolerance
                if goal is not None and not self.done:
                    dist = math.hypot(self.estimate.x - goal.x,
                                      self.estimate.y - goal.y)
                    lib = self.library
                    for cand in self.libraries:
                        if (cand.horizon_steps * cand.dt * cand.v_nominal
                                >= dist):
                            lib = cand
                    self.last_rollouts = []
                    cmd = control.plan_step(self.estimate, goal, self.grid,
                                            lib, self.weights,
                                            self.plan_params,
                                            rollouts_out=self.last_rollouts)
                    if cmd.speed == 0.0:
                        # inside the inflation margin every candidate looks
                        # blocked; fall back to the true footprint so the
                        # car can back out of the margin zone
                        self.last_rollouts = []
                        cmd = control.plan_step(
                            self.estimate, goal, self.grid, lib,
                            self.weights, self.params,
                            rollouts_out=self.last_rollouts)
                    self._offer(mux_esc.StampedCommand(
                        AUTONOMOUS_SOURCE_ID, self.now, cmd))

        selected, self.active_source = self.mux.select(self.now)
        self.smoothed = mux_esc.smooth(self.smoothed, selected, cfg.sim_dt,
                                       self.smoother)
        self.bus.publish(TOPIC_MUX_OUT, self.smoothed)

        self.particles = localization.motion_update(
            self.particles, self.smoothed, cfg.sim_dt, self.params,
            self.noise, self._rng_motion)
        self.state = sim.sim_tick(self.state, self.smoothed, cfg.sim_dt,
                                  self.grid, self.params, self.noise,
                                  self._rng_sim)
        self.tick_index += 1

        self.reports.append(TickReport(self.now, self.state.pose,
                                       self.estimate, self._clearance(),
                                       min_ttc_now))
        frame = self.state_frame()
        self.bus.publish(TOPIC_STATE, frame)
        return frame

    def state_frame(self) -> dict:
        """Wire-format state snapshot (floats rounded for a stable, compact
        encoding)."""
        ps = self.particles
        n = ps.n
        stride = max(1, -(-n // self.cfg.wire_particle_cap))
        particles = [
            {"x": _round(ps.x[i], 4), "y": _round(ps.y[i], 4),
             "theta": _round(ps.theta[i], 4), "w": _round(ps.weights[i], 6)}
            for i in range(0, n, stride)]
        scan = None
        if self.last_scan is not None:
            sp = self.last_scan.params
            inc = ((sp.angle_max - sp.angle_min) / (sp.beam_count - 1)
                   if sp.beam_count > 1 else 0.0)
            scan = {"angle_min": _round(sp.angle_min, 6),
                    "angle_increment": _round(inc, 6),
                    "ranges": [_round(r, 4) for r in self.last_scan.ranges]}
        rollouts = [
            {"cost": _round(r.cost, 3),
             "points": [[_round(p[0], 3), _round(p[1], 3)]
                        for p in r.poses[::3]]}
            for r in self.last_rollouts]
        goal = self.goal
        if self.path:
            goal = self.path[-1]
        return {
            "type": "state",
            "stamp": _round(self.now, 6),
            "pose": wire.pose_dict(self.state.pose),
            "estimate": wire.pose_dict(self.estimate),
            "scan": scan,
            "particles": particles,
            "rollouts": rollouts,
            "mux": {"active_source": self.active_source,
                    "speed": _round(self.smoothed.speed, 4),
                    "steering": _round(self.smoothed.steering_angle, 4)},
            "collided": self.state.collided,
            "goal": {"x": goal.x, "y": goal.y} if goal is not None else None,
            "done": self.done,
        }

    def run(self, duration: float, realtime_factor: float = 0.0,
            stop_when_done: bool = False,
            stop_on_collision: bool = False) -> None:
        ticks = int(round(duration / self.cfg.sim_dt))
        for _ in range(ticks):
            t0 = _time.perf_counter()
            self.tick()
            if stop_when_done and self.done:
                break
            if stop_on_collision and self.state.collided:
                break
            if realtime_factor > 0:
                budget = self.cfg.sim_dt / realtime_factor
                leftover = budget - (_time.perf_counter() - t0)
                if leftover > 0:
                    _time.sleep(leftover)
