"""Command-line entry points: `gridcar sim`, `gridcar navigate`,
`gridcar localize-bench`.

All commands are deterministic given (config, seed); reports and record
logs are byte-stable. The record/replay log is newline-delimited JSON using
the wire "state" schema plus {"type": "command", ...} records.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time as _time

import numpy as np
import yaml

from . import localization, sim, wire
from .bus import Bus
from .core import AckermannDrive, Pose2D, RandomStream, StackConfig, VehicleParams, normalize_angle
from .mapio import MapLoadError, load_map
from .stack import TOPIC_STATE, NavigationStack
from .telemetry import TelemetryServer


def load_config(path: str | None) -> StackConfig:
    cfg = StackConfig()
    if path is None:
        return cfg
    with open(path) as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping")
    vehicle = data.pop("vehicle", {})
    if vehicle:
        cfg.vehicle = dataclasses.replace(VehicleParams(), **vehicle)
    field_names = {f.name for f in dataclasses.fields(StackConfig)}
    for key, value in data.items():
        if key not in field_names:
            raise ValueError(f"{path}: unknown config key {key!r}")
        setattr(cfg, key, value)
    return cfg


def _parse_pose(text: str) -> Pose2D:
    parts = [float(p) for p in text.split(",")]
    if len(parts) == 2:
        parts.append(0.0)
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("pose must be 'x,y' or 'x,y,theta'")
    return Pose2D(*parts)


def _parse_bind(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    return host or "127.0.0.1", int(port)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--map", help="map YAML path")
    p.add_argument("--config", help="stack config YAML")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", type=_parse_pose, default=Pose2D(),
                   help="start pose 'x,y,theta'")
    p.add_argument("--realtime-factor", type=float, default=0.0,
                   help="0 = run as fast as possible")


class _Recorder:
    def __init__(self, path: str | None):
        self._f = open(path, "w") if path else None
        self._commands_seen = 0

    def frame(self, stack: NavigationStack, frame: dict) -> None:
        if self._f is None:
            return
        for cmd in stack.command_log[self._commands_seen:]:
            self._f.write(wire.dumps({
                "type": "command", "source": cmd.source_id,
                "stamp": round(cmd.stamp, 6),
                "speed": round(cmd.cmd.speed, 6),
                "steering": round(cmd.cmd.steering_angle, 6)}) + "\n")
        self._commands_seen = len(stack.command_log)
        self._f.write(wire.dumps(frame) + "\n")

    def close(self) -> None:
        if self._f is not None:
            self._f.close()


def _run_stack(stack: NavigationStack, args, duration: float,
               recorder: _Recorder, stop_when_done=False,
               stop_on_collision=False) -> None:
    ticks = int(round(duration / stack.cfg.sim_dt))
    for _ in range(ticks):
        t0 = _time.perf_counter()
        frame = stack.tick()
        recorder.frame(stack, frame)
        if stop_when_done and stack.done:
            break
        if stop_on_collision and stack.state.collided:
            break
        if args.realtime_factor > 0:
            leftover = stack.cfg.sim_dt / args.realtime_factor \
                - (_time.perf_counter() - t0)
            if leftover > 0:
                _time.sleep(leftover)


def cmd_sim(args) -> int:
    if args.replay:
        return _replay(args)
    if not args.map:
        print("sim needs --map (or --replay)", file=sys.stderr)
        return 2
    cfg = load_config(args.config)
    grid = load_map(args.map)
    bus = Bus()
    stack = NavigationStack(grid, cfg, args.seed, args.start, bus=bus,
                            init_sigma_xy=0.0, init_sigma_theta=0.0)
    server = None
    if not args.headless:
        host, port = _parse_bind(args.serve)
        server = TelemetryServer(bus, wire.map_meta_frame(grid), host, port,
                                 cfg.snapshot_rate, now_fn=lambda: stack.now)
        server.start()
        print(f"telemetry on ws://{server.host}:{server.port}", flush=True)
    recorder = _Recorder(args.record)
    try:
        rf = args.realtime_factor if args.headless else (args.realtime_factor or 1.0)
        args.realtime_factor = rf
        _run_stack(stack, args, args.duration, recorder)
    finally:
        recorder.close()
        if server is not None:
            server.stop()
    if args.fail_on_collision and stack.state.collided:
        print("collision latch set", file=sys.stderr)
        return 2
    return 0


def _replay(args) -> int:
    bus = Bus()
    server = None
    out = open(args.record, "w") if args.record else None
    try:
        with open(args.replay) as f:
            lines = [line.rstrip("\n") for line in f if line.strip()]
        frames = [wire.loads(line) for line in lines]
        if not args.headless:
            metas = [fr for fr in frames if fr["type"] == "map_meta"]
            meta = metas[0] if metas else {"type": "map_meta", "width": 0,
                                           "height": 0, "resolution": 1.0,
                                           "origin": {"x": 0, "y": 0, "theta": 0},
                                           "cells": ""}
            host, port = _parse_bind(args.serve)
            server = TelemetryServer(bus, meta, host, port)
            server.start()
        prev_stamp = None
        for frame in frames:
            if frame["type"] == "state":
                if args.realtime_factor > 0 and prev_stamp is not None:
                    _time.sleep(max(0.0, (frame["stamp"] - prev_stamp)
                                    / args.realtime_factor))
                prev_stamp = frame["stamp"]
                bus.publish(TOPIC_STATE, frame)
            if out is not None:
                out.write(wire.dumps(frame) + "\n")
    finally:
        if out is not None:
            out.close()
        if server is not None:
            server.stop()
    return 0


def cmd_navigate(args) -> int:
    if not args.map:
        print("navigate needs --map", file=sys.stderr)
        return 2
    cfg = load_config(args.config)
    grid = load_map(args.map)
    stack = NavigationStack(grid, cfg, args.seed, args.start,
                            init_sigma_xy=args.init_sigma_xy,
                            init_sigma_theta=args.init_sigma_theta)
    if sim.check_collision(grid, args.start, cfg.vehicle):
        print("start pose is in collision", file=sys.stderr)
        return 2
    if args.waypoints:
        with open(args.waypoints) as f:
            pts = yaml.safe_load(f)
        stack.set_path([Pose2D(float(p[0]), float(p[1])) for p in pts])
    elif args.goal is not None:
        stack.set_goal(args.goal)
    else:
        print("navigate needs --goal or --waypoints", file=sys.stderr)
        return 2

    recorder = _Recorder(args.record)
    try:
        _run_stack(stack, args, args.timeout, recorder, stop_when_done=True)
    finally:
        recorder.close()

    reports = stack.reports
    truth = [(r.pose.x, r.pose.y) for r in reports]
    path_length = float(sum(math.hypot(b[0] - a[0], b[1] - a[1])
                            for a, b in zip(truth, truth[1:])))
    pos_err = [math.hypot(r.pose.x - r.estimate.x, r.pose.y - r.estimate.y)
               for r in reports]
    head_err = [abs(normalize_angle(r.pose.theta - r.estimate.theta))
                for r in reports]
    success = stack.done and not stack.state.collided
    report = {
        "success": success,
        "collided": stack.state.collided,
        "elapsed_sim_time": round(stack.now, 6),
        "path_length": round(path_length, 4),
        "min_clearance": round(min((r.clearance for r in reports),
                                   default=0.0), 4),
        "localization_rmse_pos": round(float(np.sqrt(np.mean(np.square(pos_err)))), 4),
        "localization_rmse_heading": round(float(np.sqrt(np.mean(np.square(head_err)))), 4),
        "seed": args.seed,
    }
    print(json.dumps(report, separators=(",", ":")))
    return 0 if success else 3


def run_script(grid, cfg: StackConfig, seed: int, start: Pose2D,
               script: list[tuple[float, float, float]],
               init_sigma_xy: float = 0.5,
               init_sigma_theta: float = 0.2) -> dict:
    """Replay a (duration, speed, steering) command script against the
    simulator with MCL in the loop; returns error metrics vs ground truth."""
    root = RandomStream(seed)
    rng_sim = root.child("sim")
    rng_scan = root.child("scan")
    rng_motion = root.child("mcl/motion")
    rng_resample = root.child("mcl/resample")
    noise = sim.NoiseParams(cfg.speed_noise_sigma, cfg.steer_noise_sigma)
    sp = sim.ScanParams(cfg.beam_count, cfg.angle_min, cfg.angle_max,
                        cfg.range_min, cfg.range_max, cfg.range_noise_sigma)
    smp = localization.SensorModelParams(cfg.sigma_hit, cfg.z_hit,
                                         cfg.z_rand, cfg.beam_stride)
    dfield = localization.build_distance_field(grid)
    ps = localization.initialize(grid, cfg.particle_count,
                                 root.child("mcl/init"), around=start,
                                 sigma_xy=init_sigma_xy,
                                 sigma_theta=init_sigma_theta)
    state = sim.SimState(pose=start)

    segments = [(float(d), AckermannDrive(float(v), float(s)))
                for d, v, s in script]
    total = sum(d for d, _ in segments)
    ticks = int(round(total / cfg.sim_dt))
    pos_errs, head_errs = [], []
    tick = 0
    t_seg, seg_i = 0.0, 0
    for tick in range(ticks):
        if seg_i < len(segments) and t_seg >= segments[seg_i][0]:
            t_seg = 0.0
            seg_i += 1
        cmd = segments[min(seg_i, len(segments) - 1)][1].clamped(cfg.vehicle)
        if tick % cfg.scan_period_ticks == 0:
            scan = sim.simulate_scan(grid, state.pose, sp, rng_scan)
            ps = localization.sensor_update(ps, scan, grid, smp, dfield)
            if localization.should_resample(ps, cfg.ess_threshold_ratio):
                ps = localization.resample(ps, rng_resample)
            est = localization.estimate(ps)
            pos_errs.append(math.hypot(est.x - state.pose.x,
                                       est.y - state.pose.y))
            head_errs.append(abs(normalize_angle(est.theta
                                                 - state.pose.theta)))
        ps = localization.motion_update(ps, cmd, cfg.sim_dt, cfg.vehicle,
                                        noise, rng_motion)
        state = sim.sim_tick(state, cmd, cfg.sim_dt, grid, cfg.vehicle,
                             noise, rng_sim)
        t_seg += cfg.sim_dt
    return {
        "seed": seed,
        "collided": state.collided,
        "final_pos_error": round(pos_errs[-1], 4) if pos_errs else None,
        "final_heading_error": round(head_errs[-1], 4) if head_errs else None,
        "mean_pos_error": round(float(np.mean(pos_errs)), 4),
        "mean_heading_error": round(float(np.mean(head_errs)), 4),
    }


def cmd_localize_bench(args) -> int:
    if not args.map:
        print("localize-bench needs --map", file=sys.stderr)
        return 2
    cfg = load_config(args.config)
    grid = load_map(args.map)
    with open(args.script) as f:
        script = [(float(s[0]), float(s[1]), float(s[2]))
                  for s in yaml.safe_load(f)]
    seeds = [int(s) for s in args.seeds.split(",")]
    rows = [run_script(grid, cfg, seed, args.start, script,
                       args.init_sigma_xy, args.init_sigma_theta)
            for seed in seeds]
    for row in rows:
        print(json.dumps(row, separators=(",", ":")))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="gridcar")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("sim", help="run the full stack with telemetry")
    _add_common(p_sim)
    p_sim.add_argument("--duration", type=float, default=60.0)
    p_sim.add_argument("--headless", action="store_true")
    p_sim.add_argument("--serve", default="127.0.0.1:8077",
                       help="telemetry bind host:port")
    p_sim.add_argument("--record", help="write NDJSON record log")
    p_sim.add_argument("--replay", help="replay a record log instead of simulating")
    p_sim.add_argument("--fail-on-collision", action="store_true")
    p_sim.set_defaults(fn=cmd_sim)

    p_nav = sub.add_parser("navigate", help="autonomous goal seeking")
    _add_common(p_nav)
    p_nav.add_argument("--goal", type=_parse_pose)
    p_nav.add_argument("--waypoints", help="YAML list of [x, y] vertices")
    p_nav.add_argument("--timeout", type=float, default=60.0)
    p_nav.add_argument("--init-sigma-xy", type=float, default=0.1)
    p_nav.add_argument("--init-sigma-theta", type=float, default=0.05)
    p_nav.add_argument("--record")
    p_nav.set_defaults(fn=cmd_navigate)

    p_lb = sub.add_parser("localize-bench",
                          help="scripted MCL benchmark vs ground truth")
    _add_common(p_lb)
    p_lb.add_argument("--script", required=True,
                      help="YAML list of [duration, speed, steering]")
    p_lb.add_argument("--seeds", default="0")
    p_lb.add_argument("--init-sigma-xy", type=float, default=0.5)
    p_lb.add_argument("--init-sigma-theta", type=float, default=0.2)
    p_lb.set_defaults(fn=cmd_localize_bench)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (MapLoadError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
