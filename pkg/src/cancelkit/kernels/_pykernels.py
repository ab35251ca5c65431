"""Numpy implementations of the hot quadrature kernels."""

from __future__ import annotations

import numpy as np


def weighted_power_sum(values: np.ndarray, n: int, N: int, L: float, exponent: float, q: float) -> float:
    """sum_j |v_j|^q / |x_j|^exponent over half-cell-offset nodes.

    ``values`` has shape (d, N**n); |v_j| is the Euclidean norm over d and
    x_j is recovered from the C-order flat index.
    """
    h = 2.0 * L / N
    ax = -L + (np.arange(N) + 0.5) * h
    r2 = np.zeros((N,) * n)
    for i in range(n):
        shape = [1] * n
        shape[i] = N
        r2 = r2 + (ax**2).reshape(shape)
    mag2 = np.einsum("dj,dj->j", values, values)
    return float(np.sum(mag2 ** (0.5 * q) * r2.reshape(-1) ** (-0.5 * exponent)))


def line_integrals(
    field: np.ndarray, L: float, starts: np.ndarray, direction: np.ndarray, dt: float, steps: int
) -> np.ndarray:
    """Riemann sums of a bilinearly interpolated 2-D field along parallel lines.

    Line m samples the points starts[m] + t_k direction, t_k = k dt for
    k < steps; the field is extended by zero nodes beyond the grid, so it
    ramps linearly to 0 between the outermost node and one spacing past it.
    """
    N = field.shape[0]
    h = 2.0 * L / N
    out = np.empty(len(starts))
    t = np.arange(steps) * dt
    chunk = max(1, (1 << 22) // max(steps, 1))
    for s in range(0, len(starts), chunk):
        st = starts[s : s + chunk]
        gx = (st[:, 0:1] + t * direction[0] + L) / h - 0.5
        gy = (st[:, 1:2] + t * direction[1] + L) / h - 0.5
        ix = np.floor(gx).astype(np.int64)
        iy = np.floor(gy).astype(np.int64)
        wx = gx - ix
        wy = gy - iy
        acc = np.zeros(gx.shape)
        for dx, fx in ((0, 1.0 - wx), (1, wx)):
            for dy, fy in ((0, 1.0 - wy), (1, wy)):
                jx = ix + dx
                jy = iy + dy
                ok = (jx >= 0) & (jx < N) & (jy >= 0) & (jy < N)
                vals = np.where(ok, field[np.clip(jx, 0, N - 1), np.clip(jy, 0, N - 1)], 0.0)
                acc += fx * fy * vals
        out[s : s + chunk] = acc.sum(axis=1) * dt
    return out
