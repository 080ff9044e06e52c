"""Pure-numpy kernel implementations (fallback backend).

All kernels operate on plain float64 arrays; grid-related kernels take ray
origins and points already transformed into the grid frame, in cell units,
so the kernels never see map origin poses.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def _wrap(theta):
    """Vectorized wrap into (-pi, pi]."""
    r = np.fmod(theta, TWO_PI)
    r = np.where(r <= -np.pi, r + TWO_PI, r)
    r = np.where(r > np.pi, r - TWO_PI, r)
    return r


def step_kinematics_batch(x, y, th, v, delta, dt, wheelbase):
    """Exact constant-command arc step of the kinematic bicycle model."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    th = np.asarray(th, dtype=np.float64)
    v = np.broadcast_to(np.asarray(v, dtype=np.float64), x.shape)
    delta = np.broadcast_to(np.asarray(delta, dtype=np.float64), x.shape)

    tan_d = np.tan(delta)
    straight = np.abs(tan_d) < 1e-9
    # straight-line branch
    x_s = x + v * dt * np.cos(th)
    y_s = y + v * dt * np.sin(th)
    # arc branch; guard divisor on the straight lanes
    tan_safe = np.where(straight, 1.0, tan_d)
    beta = (v * dt / wheelbase) * tan_d
    radius = wheelbase / tan_safe
    x_a = x + radius * (np.sin(th + beta) - np.sin(th))
    y_a = y + radius * (np.cos(th) - np.cos(th + beta))
    x2 = np.where(straight, x_s, x_a)
    y2 = np.where(straight, y_s, y_a)
    th2 = np.where(straight, th, _wrap(th + beta))
    return x2, y2, th2


def raycast_batch(block, x0, y0, dirx, diry, max_dist):
    """Grid-traversal ray cast over a blocking mask.

    Coordinates and the returned distances are in cell units, grid frame.
    Visits every cell each ray passes through (Amanatides-Woo stepping);
    out-of-grid space never blocks. Returns max_dist on no hit and 0.0 when
    the origin cell itself blocks.
    """
    block = np.asarray(block, dtype=bool)
    h, w = block.shape
    x0 = np.asarray(x0, dtype=np.float64)
    n = x0.shape[0]
    y0 = np.asarray(y0, dtype=np.float64)
    dirx = np.asarray(dirx, dtype=np.float64)
    diry = np.asarray(diry, dtype=np.float64)

    ix = np.floor(x0).astype(np.int64)
    iy = np.floor(y0).astype(np.int64)
    step_x = np.where(dirx > 0, 1, np.where(dirx < 0, -1, 0)).astype(np.int64)
    step_y = np.where(diry > 0, 1, np.where(diry < 0, -1, 0)).astype(np.int64)
    with np.errstate(divide="ignore"):
        inv_dx = np.where(dirx != 0, 1.0 / np.abs(dirx), np.inf)
        inv_dy = np.where(diry != 0, 1.0 / np.abs(diry), np.inf)
    # parametric distance to the first boundary crossing per axis
    frac_x = np.where(step_x > 0, (ix + 1) - x0, x0 - ix)
    frac_y = np.where(step_y > 0, (iy + 1) - y0, y0 - iy)
    t_max_x = np.where(step_x != 0, frac_x * np.where(step_x != 0, inv_dx, 0.0), np.inf)
    t_max_y = np.where(step_y != 0, frac_y * np.where(step_y != 0, inv_dy, 0.0), np.inf)

    result = np.full(n, max_dist, dtype=np.float64)
    t_enter = np.zeros(n, dtype=np.float64)
    active = np.ones(n, dtype=bool)

    max_iters = int(2 * max_dist + h + w + 4)
    for _ in range(max_iters):
        if not active.any():
            break
        inb = active & (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
        hit = np.zeros(n, dtype=bool)
        hit[inb] = block[iy[inb], ix[inb]]
        result[hit] = t_enter[hit]
        active &= ~hit
        # advance remaining rays one cell
        use_x = active & (t_max_x < t_max_y)
        use_y = active & ~use_x
        t_enter = np.where(use_x, t_max_x, np.where(use_y, t_max_y, t_enter))
        ix = np.where(use_x, ix + step_x, ix)
        t_max_x = np.where(use_x, t_max_x + inv_dx, t_max_x)
        iy = np.where(use_y, iy + step_y, iy)
        t_max_y = np.where(use_y, t_max_y + inv_dy, t_max_y)
        done = active & (t_enter >= max_dist)
        active &= ~done
    np.clip(result, 0.0, max_dist, out=result)
    return result


def scan_loglik(dfield, px, py, pth, bearings, ranges, gx0, gy0, gcos, gsin,
                resolution, sigma_hit, z_hit, z_rand, range_max):
    """Likelihood-field scan scoring: summed per-beam log likelihoods.

    Beam endpoints outside the map score the random-measurement floor only.
    """
    px = np.asarray(px, dtype=np.float64)[:, None]
    py = np.asarray(py, dtype=np.float64)[:, None]
    pth = np.asarray(pth, dtype=np.float64)[:, None]
    bearings = np.asarray(bearings, dtype=np.float64)[None, :]
    ranges = np.asarray(ranges, dtype=np.float64)[None, :]

    ang = pth + bearings
    ex = px + ranges * np.cos(ang)
    ey = py + ranges * np.sin(ang)
    dx, dy = ex - gx0, ey - gy0
    gi = np.floor((gcos * dx + gsin * dy) / resolution).astype(np.int64)
    gj = np.floor((-gsin * dx + gcos * dy) / resolution).astype(np.int64)
    h, w = dfield.shape
    inb = (gi >= 0) & (gi < w) & (gj >= 0) & (gj < h)
    d = np.full(gi.shape, np.inf)
    d[inb] = dfield[gj[inb], gi[inb]]
    floor = z_rand / range_max
    lik = z_hit * np.exp(-0.5 * (d / sigma_hit) ** 2) + floor
    return np.log(lik).sum(axis=1)


def footprint_collisions(block, px, py, pth, sx, sy,
                         gx0, gy0, gcos, gsin, resolution):
    """True per pose iff any footprint sample lands on a blocking or
    out-of-bounds cell. Sample offsets (sx, sy) are in the vehicle frame."""
    block = np.asarray(block, dtype=bool)
    h, w = block.shape
    px = np.asarray(px, dtype=np.float64)[:, None]
    py = np.asarray(py, dtype=np.float64)[:, None]
    pth = np.asarray(pth, dtype=np.float64)[:, None]
    sx = np.asarray(sx, dtype=np.float64)[None, :]
    sy = np.asarray(sy, dtype=np.float64)[None, :]

    c, s = np.cos(pth), np.sin(pth)
    wx = px + c * sx - s * sy
    wy = py + s * sx + c * sy
    dx, dy = wx - gx0, wy - gy0
    gi = np.floor((gcos * dx + gsin * dy) / resolution).astype(np.int64)
    gj = np.floor((-gsin * dx + gcos * dy) / resolution).astype(np.int64)
    inb = (gi >= 0) & (gi < w) & (gj >= 0) & (gj < h)
    coll = ~inb
    coll[inb] = block[gj[inb], gi[inb]]
    return coll.any(axis=1)
