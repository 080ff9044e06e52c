"""Receding-horizon controller: score a static library of constant-steering
rollouts against a tunable cost and emit the first command of the argmin.

Cost per rollout: w_goal * distance(final position, goal)
               + w_steer * sum(|steering|)
               + w_collision if any step's footprint collides (the rollout
                 is truncated there, remaining poses frozen).
Tie-break is fully specified (smallest |first steering|, then smallest
candidate index), so planning is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import AckermannDrive, Pose2D, VehicleParams
from .mapio import OccupancyGrid
from .sim import footprint_samples, step_kinematics


@dataclass(frozen=True)
class CostWeights:
    w_goal: float = 1.0
    w_collision: float = 1e4
    w_steer: float = 0.2
    collision_lethal: bool = True

    def __post_init__(self):
        if min(self.w_goal, self.w_collision, self.w_steer) < 0:
            raise ValueError("cost weights must be non-negative")


@dataclass(frozen=True)
class RolloutLibrary:
    """K candidate steering sequences over a fixed horizon."""

    steering: np.ndarray        # (K, T)
    horizon_steps: int
    dt: float
    v_nominal: float

    @property
    def k(self) -> int:
        return self.steering.shape[0]


@dataclass(frozen=True)
class Rollout:
    poses: np.ndarray           # (T+1, 3)
    controls: np.ndarray        # (T, 2) speed, steering
    cost: float
    collided_at: int | None = None


def build_library(params: VehicleParams, k: int = 31, horizon_steps: int = 30,
                  dt: float = 0.1, v_nominal: float = 1.0) -> RolloutLibrary:
    """Constant-steering candidates evenly spaced over the steering range;
    K must be odd so the middle candidate is exactly straight."""
    if k < 3 or k % 2 == 0:
        raise ValueError("candidate count must be odd and >= 3")
    deltas = np.linspace(-params.steering_limit, params.steering_limit, k)
    deltas[k // 2] = 0.0
    steering = np.repeat(deltas[:, None], horizon_steps, axis=1)
    return RolloutLibrary(steering, horizon_steps, dt, v_nominal)


def evaluate_rollout(start: Pose2D, controls: np.ndarray, grid: OccupancyGrid,
                     goal: Pose2D, weights: CostWeights, params: VehicleParams,
                     dt: float = 0.1) -> Rollout:
    """Forward-simulate one (T, 2) control sequence [speed, steering] with
    the exact-arc integrator and cost it. Truncates at the first colliding
    step; remaining poses stay frozen at the collision pose."""
    controls = np.asarray(controls, dtype=np.float64)
    t_n = controls.shape[0]
    poses = np.empty((t_n + 1, 3))
    poses[0] = (start.x, start.y, start.theta)

    pose = start
    collided_at = None
    steer_sum = 0.0
    for t in range(t_n):
        v, delta = controls[t]
        steer_sum += abs(delta)
        if collided_at is None:
            nxt = step_kinematics(pose, AckermannDrive(v, delta), dt, params)
            if _pose_collides(nxt, grid, params):
                collided_at = t
            else:
                pose = nxt
        poses[t + 1] = (pose.x, pose.y, pose.theta)

    cost = (weights.w_goal * math.hypot(poses[-1, 0] - goal.x,
                                        poses[-1, 1] - goal.y)
            + weights.w_steer * steer_sum)
    if collided_at is not None:
        cost += weights.w_collision
    return Rollout(poses, controls, cost, collided_at)


def _pose_collides(pose: Pose2D, grid: OccupancyGrid,
                   params: VehicleParams) -> bool:
    sx, sy = footprint_samples(params, grid.resolution)
    o = grid.origin
    return bool(kernels.footprint_collisions(
        grid.blocking_mask(unknown_blocks=True),
        np.array([pose.x]), np.array([pose.y]), np.array([pose.theta]),
        sx, sy, o.x, o.y, math.cos(o.theta), math.sin(o.theta),
        grid.resolution)[0])


def evaluate_library(start: Pose2D, lib: RolloutLibrary, grid: OccupancyGrid,
                     goal: Pose2D, weights: CostWeights,
                     params: VehicleParams) -> list[Rollout]:
    """Batched evaluation of every candidate (same results as per-candidate
    evaluate_rollout, vectorized across the library)."""
    k, t_n = lib.steering.shape
    sx, sy = footprint_samples(params, grid.resolution)
    o = grid.origin
    oc, osn = math.cos(o.theta), math.sin(o.theta)
    block = grid.blocking_mask(unknown_blocks=True)

    poses = np.empty((k, t_n + 1, 3))
    poses[:, 0] = (start.x, start.y, start.theta)
    frozen = np.full(k, -1, dtype=np.int64)  # first colliding step, -1 = none
    x = np.full(k, start.x)
    y = np.full(k, start.y)
    th = np.full(k, start.theta)
    for t in range(t_n):
        nx, ny, nth = kernels.step_kinematics_batch(
            x, y, th, np.full(k, lib.v_nominal), lib.steering[:, t],
            lib.dt, params.wheelbase)
        coll = kernels.footprint_collisions(
            block, nx, ny, nth, sx, sy, o.x, o.y, oc, osn, grid.resolution)
        newly = coll & (frozen < 0)
        frozen[newly] = t
        active = frozen < 0
        x = np.where(active, nx, x)
        y = np.where(active, ny, y)
        th = np.where(active, nth, th)
        poses[:, t + 1, 0] = x
        poses[:, t + 1, 1] = y
        poses[:, t + 1, 2] = th

    goal_d = np.hypot(poses[:, -1, 0] - goal.x, poses[:, -1, 1] - goal.y)
    steer_sum = np.abs(lib.steering).sum(axis=1)
    costs = weights.w_goal * goal_d + weights.w_steer * steer_sum
    costs = costs + np.where(frozen >= 0, weights.w_collision, 0.0)

    out = []
    for i in range(k):
        controls = np.stack([np.full(t_n, lib.v_nominal), lib.steering[i]],
                            axis=1)
        out.append(Rollout(poses[i], controls, float(costs[i]),
                           int(frozen[i]) if frozen[i] >= 0 else None))
    return out


def plan_step(estimate: Pose2D, goal: Pose2D, grid: OccupancyGrid,
              lib: RolloutLibrary, weights: CostWeights,
              params: VehicleParams,
              rollouts_out: list | None = None) -> AckermannDrive:
    """Evaluate the library and return the first command of the best
    rollout. If every candidate collides immediately, stop. Ties go to the
    smallest |steering|, then the smallest candidate index."""
    rollouts = evaluate_library(estimate, lib, grid, goal, weights, params)
    if rollouts_out is not None:
        rollouts_out.extend(rollouts)
    viable = [i for i in range(lib.k) if rollouts[i].collided_at != 0]
    if not viable:
        return AckermannDrive(0.0, 0.0)
    best = min(viable,
               key=lambda i: (rollouts[i].cost,
                              abs(lib.steering[i, 0]), i))
    return AckermannDrive(lib.v_nominal, float(lib.steering[best, 0]))


def next_waypoint(path: list[Pose2D], current: Pose2D,
                  lookahead: float = 1.5,
                  goal_tolerance: float = 0.3) -> tuple[Pose2D, bool]:
    """Pick the lookahead goal along a waypoint path.

    Returns the first vertex at least ``lookahead`` along-path meters past
    the vertex nearest the robot (or the final vertex), plus a done flag
    when the robot is within goal_tolerance of the path end."""
    if not path:
        raise ValueError("path must be non-empty")
    d2 = [(p.x - current.x) ** 2 + (p.y - current.y) ** 2 for p in path]
    nearest = int(np.argmin(d2))
    goal = path[-1]
    acc = 0.0
    for i in range(nearest + 1, len(path)):
        acc += math.hypot(path[i].x - path[i - 1].x, path[i].y - path[i - 1].y)
        if acc >= lookahead:
            goal = path[i]
            break
    done = math.hypot(current.x - path[-1].x,
                      current.y - path[-1].y) < goal_tolerance
    return goal, done
