# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the quadrature kernels in ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, pow, sqrt

cnp.import_array()


def weighted_power_sum(const double[:, ::1] values, int n, int N, double L, double exponent, double q):
    cdef Py_ssize_t d = values.shape[0]
    cdef Py_ssize_t total = values.shape[1]
    cdef double h = 2.0 * L / N
    cdef double acc = 0.0, r2, mag2, c, v
    cdef Py_ssize_t j, rest, i, comp
    cdef double half_q = 0.5 * q, half_e = 0.5 * exponent
    for j in range(total):
        rest = j
        r2 = 0.0
        for i in range(n):
            c = -L + ((rest % N) + 0.5) * h
            r2 += c * c
            rest //= N
        mag2 = 0.0
        for comp in range(d):
            v = values[comp, j]
            mag2 += v * v
        if mag2 > 0.0:
            acc += pow(mag2, half_q) / pow(r2, half_e)
    return acc


def line_integrals(const double[:, ::1] field, double L, const double[:, ::1] starts, const double[::1] direction, double dt, int steps):
    cdef Py_ssize_t N = field.shape[0]
    cdef Py_ssize_t M = starts.shape[0]
    cdef double h = 2.0 * L / N
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(M)
    cdef Py_ssize_t m, k, ix, iy
    cdef double gx, gy, wx, wy, acc, t, f00, f01, f10, f11
    for m in range(M):
        acc = 0.0
        for k in range(steps):
            t = k * dt
            gx = (starts[m, 0] + t * direction[0] + L) / h - 0.5
            gy = (starts[m, 1] + t * direction[1] + L) / h - 0.5
            ix = <Py_ssize_t>floor(gx)
            iy = <Py_ssize_t>floor(gy)
            if ix < -1 or iy < -1 or ix >= N or iy >= N:
                continue
            wx = gx - ix
            wy = gy - iy
            f00 = field[ix, iy] if (ix >= 0 and iy >= 0) else 0.0
            f01 = field[ix, iy + 1] if (ix >= 0 and iy + 1 < N) else 0.0
            f10 = field[ix + 1, iy] if (ix + 1 < N and iy >= 0) else 0.0
            f11 = field[ix + 1, iy + 1] if (ix + 1 < N and iy + 1 < N) else 0.0
            acc += (1.0 - wx) * ((1.0 - wy) * f00 + wy * f01) + wx * ((1.0 - wy) * f10 + wy * f11)
        out[m] = acc * dt
    return out
