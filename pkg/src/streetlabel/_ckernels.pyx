# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``.

Arithmetic is kept in the same order as the Python versions; the extension is
built with ``-ffp-contract=off`` so no multiply-add gets fused.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fmod, fabs, sqrt, floor

cnp.import_array()

BACKEND = "cython"

cdef double PI = 3.141592653589793
cdef double TWO_PI = 6.283185307179586


cdef inline double _angle_diff(double a, double b) noexcept nogil:
    cdef double x = fmod(a - b + PI, TWO_PI)
    if x < 0.0:
        x += TWO_PI
    x -= PI
    if x >= PI:
        x -= TWO_PI
    return x


cdef inline double _dist(double px, double py, double ax, double ay,
                         double bx, double by, double *t_out) noexcept nogil:
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
    cdef double cx, cy, ex, ey
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
    t_out[0] = t
    return sqrt(ex * ex + ey * ey)


def angle_diff(double a, double b):
    return _angle_diff(a, b)


def project(double px, double py, double ax, double ay, double bx, double by):
    cdef double t
    cdef double d = _dist(px, py, ax, ay, bx, by, &t)
    cdef double cx, cy
    if t == 0.0:
        cx = ax
        cy = ay
    elif t == 1.0:
        cx = bx
        cy = by
    else:
        cx = ax + t * (bx - ax)
        cy = ay + t * (by - ay)
    return t, cx, cy, d


cdef inline double _score(double dist, double heading, double bearing, double w) noexcept nogil:
    cdef double d1 = fabs(_angle_diff(heading, bearing))
    cdef double d2 = fabs(_angle_diff(heading, bearing + PI))
    return dist + w * (d1 if d1 < d2 else d2)


def match_score(double dist, double heading, double bearing, double w_heading):
    return _score(dist, heading, bearing, w_heading)


cdef inline bint _key_less(const cnp.int64_t[:, :] keys, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef int k
    for k in range(3):
        if keys[i, k] != keys[j, k]:
            return keys[i, k] < keys[j, k]
    return i < j


def best_segment(const cnp.int64_t[:] cand, double px, double py, double heading,
                 double max_dist, double w_heading,
                 const double[:] x0, const double[:] y0,
                 const double[:] x1, const double[:] y1,
                 const double[:] bearing, const cnp.int64_t[:, :] keys):
    cdef Py_ssize_t best = -1
    cdef Py_ssize_t n = cand.shape[0]
    cdef Py_ssize_t j, i
    cdef double best_score = 0.0
    cdef double dist, score, t
    with nogil:
        for j in range(n):
            i = <Py_ssize_t>cand[j]
            dist = _dist(px, py, x0[i], y0[i], x1[i], y1[i], &t)
            if dist > max_dist:
                continue
            score = _score(dist, heading, bearing[i], w_heading)
            if best < 0 or score < best_score:
                best = i
                best_score = score
            elif score == best_score and _key_less(keys, i, best):
                best = i
    return best


def within_radius(const cnp.int64_t[:] cand, double px, double py, double radius,
                  const double[:] x0, const double[:] y0,
                  const double[:] x1, const double[:] y1):
    cdef Py_ssize_t n = cand.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[:] mask = out
    cdef Py_ssize_t j, i
    cdef double t
    with nogil:
        for j in range(n):
            i = <Py_ssize_t>cand[j]
            mask[j] = _dist(px, py, x0[i], y0[i], x1[i], y1[i], &t) <= radius
    return out.view(bool)


def bilinear_sample(const unsigned char[:, :, :] src, sx, sy):
    cdef double[:, :] xs = np.ascontiguousarray(sx, dtype=np.float64)
    cdef double[:, :] ys = np.ascontiguousarray(sy, dtype=np.float64)
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1], nc = src.shape[2]
    cdef Py_ssize_t oh = xs.shape[0], ow = xs.shape[1]
    out = np.empty((oh, ow, nc), dtype=np.uint8)
    cdef unsigned char[:, :, :] o = out
    cdef Py_ssize_t r, c, ch, ix0, ix1, iy0, iy1
    cdef double x, y, xf, yf, fx, fy, gx, gy, v
    with nogil:
        for r in range(oh):
            for c in range(ow):
                x = xs[r, c] - 0.5
                y = ys[r, c] - 0.5
                if y < 0.0:
                    y = 0.0
                elif y > h - 1.0:
                    y = h - 1.0
                xf = floor(x)
                yf = floor(y)
                fx = x - xf
                fy = y - yf
                ix0 = (<Py_ssize_t>xf) % w
                if ix0 < 0:
                    ix0 += w
                ix1 = (ix0 + 1) % w
                iy0 = <Py_ssize_t>yf
                iy1 = iy0 + 1
                if iy1 > h - 1:
                    iy1 = h - 1
                gx = 1.0 - fx
                gy = 1.0 - fy
                for ch in range(nc):
                    v = (gx * gy * src[iy0, ix0, ch] + fx * gy * src[iy0, ix1, ch]
                         + gx * fy * src[iy1, ix0, ch] + fx * fy * src[iy1, ix1, ch])
                    v = floor(v + 0.5)
                    if v < 0.0:
                        v = 0.0
                    elif v > 255.0:
                        v = 255.0
                    o[r, c, ch] = <unsigned char>v
    return out
