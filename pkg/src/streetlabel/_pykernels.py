"""Pure-Python implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` that performs the same
floating-point operations in the same order, so both backends return
bit-identical results.
"""

from __future__ import annotations

import math

import numpy as np

PI = math.pi
TWO_PI = 2.0 * math.pi

BACKEND = "python"


def angle_diff(a, b):
    x = math.fmod(a - b + PI, TWO_PI)
    if x < 0.0:
        x += TWO_PI
    x -= PI
    if x >= PI:
        x -= TWO_PI
    return x


def project(px, py, ax, ay, bx, by):
    """Return ``(t, cx, cy, dist)`` for the clamped projection onto ``a -> b``."""
    dx = bx - ax
    dy = by - ay
    t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
    if t <= 0.0:
        t = 0.0
        cx = ax
        cy = ay
    elif t >= 1.0:
        t = 1.0
        cx = bx
        cy = by
    else:
        cx = ax + t * dx
        cy = ay + t * dy
    ex = px - cx
    ey = py - cy
    return t, cx, cy, math.sqrt(ex * ex + ey * ey)


def match_score(dist, heading, bearing, w_heading):
    d1 = abs(angle_diff(heading, bearing))
    d2 = abs(angle_diff(heading, bearing + PI))
    return dist + w_heading * (d1 if d1 < d2 else d2)


def best_segment(cand, px, py, heading, max_dist, w_heading, x0, y0, x1, y1, bearing, keys):
    """Index of the lowest-scoring candidate within ``max_dist``, or -1.

    ``keys`` is an (n, 3) integer array ``(way_id, node_a, node_b)`` used to
    break exact score ties; the segment index breaks any that remain.
    """
    best = -1
    best_score = 0.0
    for i in cand:
        i = int(i)
        dist = project(px, py, x0[i], y0[i], x1[i], y1[i])[3]
        if dist > max_dist:
            continue
        score = match_score(dist, heading, bearing[i], w_heading)
        if best < 0 or score < best_score:
            best, best_score = i, score
        elif score == best_score:
            ki = (keys[i, 0], keys[i, 1], keys[i, 2], i)
            kb = (keys[best, 0], keys[best, 1], keys[best, 2], best)
            if ki < kb:
                best = i
    return best


def within_radius(cand, px, py, radius, x0, y0, x1, y1):
    """Boolean mask over ``cand``: segment distance to ``p`` is at most ``radius``."""
    out = np.zeros(len(cand), dtype=bool)
    for j, i in enumerate(cand):
        i = int(i)
        out[j] = project(px, py, x0[i], y0[i], x1[i], y1[i])[3] <= radius
    return out


def bilinear_sample(src, sx, sy):
    """Sample ``src`` (H, W, C uint8) at fractional pixel coordinates.

    ``sx``/``sy`` address pixel edges (pixel ``i`` spans ``[i, i + 1)``).
    Columns wrap around; rows clamp to the image.
    """
    h, w = src.shape[:2]
    x = np.asarray(sx, dtype=np.float64) - 0.5
    y = np.asarray(sy, dtype=np.float64) - 0.5
    y = np.clip(y, 0.0, h - 1.0)
    xf = np.floor(x)
    yf = np.floor(y)
    fx = (x - xf)[..., None]
    fy = (y - yf)[..., None]
    x0 = np.mod(xf.astype(np.int64), w)
    x1 = np.mod(x0 + 1, w)
    y0 = yf.astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    p00 = src[y0, x0].astype(np.float64)
    p10 = src[y0, x1].astype(np.float64)
    p01 = src[y1, x0].astype(np.float64)
    p11 = src[y1, x1].astype(np.float64)
    gx = 1.0 - fx
    gy = 1.0 - fy
    v = gx * gy * p00 + fx * gy * p10 + gx * fy * p01 + fx * fy * p11
    v = np.floor(v + 0.5)
    return np.clip(v, 0.0, 255.0).astype(np.uint8)
