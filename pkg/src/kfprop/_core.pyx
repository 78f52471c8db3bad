# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: direct kernel quadrature and velocity-shift interpolation.

Mirrors kfprop._core_py exactly (same signatures, same semantics); selected at
import by kfprop._backend when the extension built.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, floor, round as c_round, sqrt

cnp.import_array()


def free_apply_direct(const double[:, ::1] f, const double[::1] x, const double[::1] v,
                      const double[:, ::1] kmat, double sigma, double omega,
                      double period):
    cdef Py_ssize_t nx = x.shape[0], nv = v.shape[0]
    cdef Py_ssize_t ix, jx, iv, jv
    cdef double inv4s = 1.0 / (4.0 * sigma)
    cdef double reach = sqrt(4.0 * sigma * 700.0)
    cdef double edge = 0.5 * period - reach
    cdef double d, g, acc, dx, m
    out_arr = np.empty((nx, nv))
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] vsum = omega * (np.asarray(v)[:, None] + np.asarray(v)[None, :])
    for ix in range(nx):
        for iv in range(nv):
            acc = 0.0
            for jx in range(nx):
                dx = x[ix] - x[jx]
                for jv in range(nv):
                    d = dx - vsum[iv, jv]
                    d -= period * c_round(d / period)
                    g = exp(-d * d * inv4s)
                    if d > edge or d < -edge:
                        g += exp(-(d - period) * (d - period) * inv4s)
                        g += exp(-(d + period) * (d + period) * inv4s)
                    acc += g * kmat[iv, jv] * f[jx, jv]
            out[ix, iv] = acc
    return out_arr


def shift_v_linear(const double[:, ::1] a, const double[::1] delta):
    cdef Py_ssize_t rows = a.shape[0], nv = a.shape[1]
    cdef Py_ssize_t r, k
    cdef long long j, base
    cdef double w
    out_arr = np.zeros((rows, nv))
    cdef double[:, ::1] out = out_arr
    for r in range(rows):
        base = <long long>floor(delta[r])
        w = delta[r] - base
        for k in range(nv):
            j = k + base
            if 0 <= j < nv:
                out[r, k] += (1.0 - w) * a[r, j]
            if 0 <= j + 1 < nv:
                out[r, k] += w * a[r, j + 1]
    return out_arr


def shift_v_cubic(const double[:, ::1] a, const double[::1] delta):
    cdef Py_ssize_t rows = a.shape[0], nv = a.shape[1]
    cdef Py_ssize_t r, k
    cdef long long j, base
    cdef double w, wm1, w0, w1, w2, acc
    out_arr = np.zeros((rows, nv))
    cdef double[:, ::1] out = out_arr
    for r in range(rows):
        base = <long long>floor(delta[r])
        w = delta[r] - base
        wm1 = -w * (w - 1.0) * (w - 2.0) / 6.0
        w0 = (w + 1.0) * (w - 1.0) * (w - 2.0) / 2.0
        w1 = -(w + 1.0) * w * (w - 2.0) / 2.0
        w2 = (w + 1.0) * w * (w - 1.0) / 6.0
        for k in range(nv):
            j = k + base
            acc = 0.0
            if 0 <= j - 1 < nv:
                acc += wm1 * a[r, j - 1]
            if 0 <= j < nv:
                acc += w0 * a[r, j]
            if 0 <= j + 1 < nv:
                acc += w1 * a[r, j + 1]
            if 0 <= j + 2 < nv:
                acc += w2 * a[r, j + 2]
            out[r, k] = acc
    return out_arr
