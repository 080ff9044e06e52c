"""Numba-jitted kernel implementations (default backend).

Mirrors the semantics of ``_numpy`` exactly; see that module for the
contracts. No fastmath: results must be stable across runs.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi


@njit(cache=True)
def _wrap(theta):
    r = np.fmod(theta, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    elif r > math.pi:
        r -= TWO_PI
    return r


@njit(cache=True)
def _step_kin(x, y, th, v, delta, dt, wheelbase, x2, y2, th2):
    for i in range(x.shape[0]):
        tan_d = math.tan(delta[i])
        if abs(tan_d) < 1e-9:
            x2[i] = x[i] + v[i] * dt * math.cos(th[i])
            y2[i] = y[i] + v[i] * dt * math.sin(th[i])
            th2[i] = th[i]
        else:
            beta = (v[i] * dt / wheelbase) * tan_d
            radius = wheelbase / tan_d
            x2[i] = x[i] + radius * (math.sin(th[i] + beta) - math.sin(th[i]))
            y2[i] = y[i] + radius * (math.cos(th[i]) - math.cos(th[i] + beta))
            th2[i] = _wrap(th[i] + beta)


def step_kinematics_batch(x, y, th, v, delta, dt, wheelbase):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    th = np.ascontiguousarray(th, dtype=np.float64)
    v = np.ascontiguousarray(np.broadcast_to(np.asarray(v, dtype=np.float64), x.shape))
    delta = np.ascontiguousarray(np.broadcast_to(np.asarray(delta, dtype=np.float64), x.shape))
    x2 = np.empty_like(x)
    y2 = np.empty_like(x)
    th2 = np.empty_like(x)
    _step_kin(x, y, th, v, delta, float(dt), float(wheelbase), x2, y2, th2)
    return x2, y2, th2


@njit(cache=True)
def _raycast_one(block, x0, y0, dirx, diry, max_dist):
    h, w = block.shape
    ix = int(math.floor(x0))
    iy = int(math.floor(y0))
    step_x = 1 if dirx > 0 else (-1 if dirx < 0 else 0)
    step_y = 1 if diry > 0 else (-1 if diry < 0 else 0)
    inv_dx = 1.0 / abs(dirx) if dirx != 0.0 else np.inf
    inv_dy = 1.0 / abs(diry) if diry != 0.0 else np.inf
    if step_x > 0:
        t_max_x = ((ix + 1) - x0) * inv_dx
    elif step_x < 0:
        t_max_x = (x0 - ix) * inv_dx
    else:
        t_max_x = np.inf
    if step_y > 0:
        t_max_y = ((iy + 1) - y0) * inv_dy
    elif step_y < 0:
        t_max_y = (y0 - iy) * inv_dy
    else:
        t_max_y = np.inf

    t_enter = 0.0
    while t_enter < max_dist:
        if 0 <= ix < w and 0 <= iy < h and block[iy, ix]:
            return min(max(t_enter, 0.0), max_dist)
        if t_max_x < t_max_y:
            t_enter = t_max_x
            ix += step_x
            t_max_x += inv_dx
        else:
            t_enter = t_max_y
            iy += step_y
            t_max_y += inv_dy
    return max_dist


@njit(cache=True)
def _raycast_batch(block, x0, y0, dirx, diry, max_dist, out):
    for i in range(x0.shape[0]):
        out[i] = _raycast_one(block, x0[i], y0[i], dirx[i], diry[i], max_dist)


def raycast_batch(block, x0, y0, dirx, diry, max_dist):
    block = np.ascontiguousarray(block, dtype=np.bool_)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    y0 = np.ascontiguousarray(y0, dtype=np.float64)
    dirx = np.ascontiguousarray(dirx, dtype=np.float64)
    diry = np.ascontiguousarray(diry, dtype=np.float64)
    out = np.empty_like(x0)
    _raycast_batch(block, x0, y0, dirx, diry, float(max_dist), out)
    return out


@njit(cache=True)
def _scan_loglik(dfield, px, py, pth, bearings, ranges, gx0, gy0, gcos, gsin,
                 resolution, sigma_hit, z_hit, z_rand, range_max, out):
    h, w = dfield.shape
    floor = z_rand / range_max
    inv2s2 = 0.5 / (sigma_hit * sigma_hit)
    for p in range(px.shape[0]):
        total = 0.0
        for b in range(bearings.shape[0]):
            ang = pth[p] + bearings[b]
            ex = px[p] + ranges[b] * math.cos(ang)
            ey = py[p] + ranges[b] * math.sin(ang)
            dx = ex - gx0
            dy = ey - gy0
            gi = int(math.floor((gcos * dx + gsin * dy) / resolution))
            gj = int(math.floor((-gsin * dx + gcos * dy) / resolution))
            if 0 <= gi < w and 0 <= gj < h:
                d = dfield[gj, gi]
                lik = z_hit * math.exp(-d * d * inv2s2) + floor
            else:
                lik = floor
            total += math.log(lik)
        out[p] = total


def scan_loglik(dfield, px, py, pth, bearings, ranges, gx0, gy0, gcos, gsin,
                resolution, sigma_hit, z_hit, z_rand, range_max):
    dfield = np.ascontiguousarray(dfield, dtype=np.float64)
    px = np.ascontiguousarray(px, dtype=np.float64)
    py = np.ascontiguousarray(py, dtype=np.float64)
    pth = np.ascontiguousarray(pth, dtype=np.float64)
    bearings = np.ascontiguousarray(bearings, dtype=np.float64)
    ranges = np.ascontiguousarray(ranges, dtype=np.float64)
    out = np.empty_like(px)
    _scan_loglik(dfield, px, py, pth, bearings, ranges, float(gx0), float(gy0),
                 float(gcos), float(gsin), float(resolution), float(sigma_hit),
                 float(z_hit), float(z_rand), float(range_max), out)
    return out


@njit(cache=True)
def _footprint_collisions(block, px, py, pth, sx, sy, gx0, gy0, gcos, gsin,
                          resolution, out):
    h, w = block.shape
    for p in range(px.shape[0]):
        c = math.cos(pth[p])
        s = math.sin(pth[p])
        coll = False
        for k in range(sx.shape[0]):
            wx = px[p] + c * sx[k] - s * sy[k]
            wy = py[p] + s * sx[k] + c * sy[k]
            dx = wx - gx0
            dy = wy - gy0
            gi = int(math.floor((gcos * dx + gsin * dy) / resolution))
            gj = int(math.floor((-gsin * dx + gcos * dy) / resolution))
            if not (0 <= gi < w and 0 <= gj < h) or block[gj, gi]:
                coll = True
                break
        out[p] = coll


def footprint_collisions(block, px, py, pth, sx, sy,
                         gx0, gy0, gcos, gsin, resolution):
    block = np.ascontiguousarray(block, dtype=np.bool_)
    px = np.ascontiguousarray(px, dtype=np.float64)
    py = np.ascontiguousarray(py, dtype=np.float64)
    pth = np.ascontiguousarray(pth, dtype=np.float64)
    sx = np.ascontiguousarray(sx, dtype=np.float64)
    sy = np.ascontiguousarray(sy, dtype=np.float64)
    out = np.empty(px.shape[0], dtype=np.bool_)
    _footprint_collisions(block, px, py, pth, sx, sy, float(gx0), float(gy0),
                          float(gcos), float(gsin), float(resolution), out)
    return out
