#!/usr/bin/env python3
"""Benchmark the hot kernels under both backends.

Imports ``gridcar.kernels._numpy`` and ``gridcar.kernels._numba``
directly (bypassing the GRIDCAR_NUMBA switch) and times identical
workloads sized like real stack usage: rollout batches, a full LIDAR
sweep, particle-filter scan scoring, and footprint collision checks.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import math
import time
from pathlib import Path

import numpy as np

from gridcar import localization, sim
from gridcar.core import VehicleParams
from gridcar.kernels import _numpy
from gridcar.mapio import load_map

MAPS = Path(__file__).resolve().parent.parent / "maps"

try:
    from gridcar.kernels import _numba
except ImportError:
    _numba = None


def workloads():
    grid = load_map(MAPS / "room.yaml")
    params = VehicleParams()
    rng = np.random.default_rng(0)

    n = 31 * 30  # one full rollout-library evaluation per call
    kin = dict(x=rng.uniform(1, 9, n), y=rng.uniform(1, 7, n),
               th=rng.uniform(-math.pi, math.pi, n),
               v=np.full(n, 1.0),
               delta=rng.uniform(-0.34, 0.34, n),
               dt=0.1, wheelbase=params.wheelbase)

    beams = 720  # one simulated LIDAR sweep
    bearings = np.linspace(-math.pi, math.pi, beams, endpoint=False)
    block = grid.blocking_mask(False)
    ox, oy = 5.0 / grid.resolution, 4.0 / grid.resolution
    ray = dict(block=block,
               x0=np.full(beams, ox), y0=np.full(beams, oy),
               dirx=np.cos(bearings), diry=np.sin(bearings),
               max_dist=10.0 / grid.resolution)

    particles = 2000  # one sensor update: particles x strided beams
    dfield = localization.build_distance_field(grid)
    stride_bearings = bearings[::24]
    ranges = sim.raycast_many(grid, 5.0, 4.0, stride_bearings, 10.0)
    o = grid.origin
    lik = dict(dfield=dfield.meters,
               px=rng.uniform(1, 9, particles),
               py=rng.uniform(1, 7, particles),
               pth=rng.uniform(-math.pi, math.pi, particles),
               bearings=stride_bearings, ranges=ranges,
               gx0=o.x, gy0=o.y, gcos=math.cos(o.theta),
               gsin=math.sin(o.theta), resolution=grid.resolution,
               sigma_hit=0.1, z_hit=0.85, z_rand=0.15, range_max=10.0)

    sx, sy = sim.footprint_samples(params, grid.resolution)
    fp = dict(block=block,
              px=rng.uniform(1, 9, n), py=rng.uniform(1, 7, n),
              pth=rng.uniform(-math.pi, math.pi, n),
              sx=sx, sy=sy, gx0=o.x, gy0=o.y,
              gcos=math.cos(o.theta), gsin=math.sin(o.theta),
              resolution=grid.resolution)

    return [("step_kinematics_batch", kin),
            ("raycast_batch", ray),
            ("scan_loglik", lik),
            ("footprint_collisions", fp)]


def bench(fn, kwargs, repeats):
    fn(**kwargs)  # warm-up (and numba JIT compilation)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(**kwargs)
    return (time.perf_counter() - t0) / repeats


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=50)
    args = ap.parse_args()

    print(f"{'kernel':<24} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for name, kwargs in workloads():
        t_np = bench(getattr(_numpy, name), kwargs, args.repeats)
        if _numba is None:
            print(f"{name:<24} {t_np * 1e3:>10.3f}ms {'n/a':>12} {'n/a':>9}")
            continue
        t_nb = bench(getattr(_numba, name), kwargs, args.repeats)
        print(f"{name:<24} {t_np * 1e3:>10.3f}ms {t_nb * 1e3:>10.3f}ms"
              f" {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
