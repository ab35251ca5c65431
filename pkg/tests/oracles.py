"""Independent reference computations used by the tests.

Nothing here calls the deciders under test: ranks come from numpy SVDs or
direct Fraction arithmetic, kernels from closed forms.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from itertools import product

import numpy as np

from cancelkit.exact import ExactMatrix
from cancelkit.operator import HomOperator, multi_indices


def random_operator(rng: random.Random, n: int, k: int, dim_v: int, dim_e: int, density: float = 0.6, bound: int = 3):
    terms = {}
    for alpha in multi_indices(n, k):
        rows = [
            [Fraction(rng.randint(-bound, bound)) if rng.random() < density else Fraction(0) for _ in range(dim_v)]
            for _ in range(dim_e)
        ]
        terms[alpha] = ExactMatrix(rows, cols=dim_v)
    return HomOperator(n, k, dim_v, dim_e, terms)


def symbol_by_hand(A: HomOperator, xi) -> list[list[Fraction]]:
    """sum_alpha xi^alpha A_alpha by explicit loops."""
    out = [[Fraction(0)] * A.dim_v for _ in range(A.dim_e)]
    for alpha, mat in A.terms.items():
        m = Fraction(1)
        for x, a in zip(xi, alpha):
            m *= Fraction(x) ** a
        for i in range(A.dim_e):
            for j in range(A.dim_v):
                out[i][j] += m * mat[i, j]
    return out


def fraction_rank(rows: list[list[Fraction]]) -> int:
    """Gaussian elimination over Fractions written out independently of ExactMatrix."""
    m = [list(r) for r in rows]
    rank, cols = 0, len(m[0]) if m else 0
    for c in range(cols):
        piv = next((r for r in range(rank, len(m)) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][c] != 0:
                f = m[r][c] / m[rank][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def integer_directions(n: int, bound: int = 2):
    for v in product(range(-bound, bound + 1), repeat=n):
        if any(v):
            yield tuple(Fraction(x) for x in v)


def numeric_range_intersection_dim(A: HomOperator, samples: int = 12, seed: int = 0, tol: float = 1e-9) -> int:
    """dim of the common range of A(xi) over random real xi, by SVDs."""
    rng = np.random.default_rng(seed)
    basis = np.eye(A.dim_e)
    for _ in range(samples):
        u, s, _ = np.linalg.svd(A.numeric_symbol(rng.normal(size=A.n)), full_matrices=False)
        r = int(np.sum(s > tol * max(s.max(initial=0.0), 1e-300)))
        if r == 0 or basis.shape[1] == 0:
            return 0
        # x = basis @ c lies in range(u_r) iff (I - u_r u_r^T) basis @ c = 0
        resid = basis - u[:, :r] @ (u[:, :r].T @ basis)
        _, sv, vt = np.linalg.svd(resid)
        keep = int(np.sum(sv > 1e-7))
        basis, _ = np.linalg.qr(basis @ vt[keep:].T)
    return basis.shape[1]


def brute_rank_one(a, b, samples: int = 500, seed: int = 0) -> bool:
    """True if sampling finds xi with {a_i : b_i not parallel to xi} not spanning V.

    A violation at xi means some v != 0 is orthogonal to every a_i whose b_i
    is not parallel to xi. Directions are drawn from small integer vectors so
    the lines through the b_i are hit with positive probability.
    """
    rng = np.random.default_rng(seed)
    A = np.array([[float(x) for x in ai] for ai in a])
    B = np.array([[float(x) for x in bi] for bi in b])
    n, dv = B.shape[1], A.shape[1]
    for _ in range(samples):
        xi = rng.integers(-2, 3, size=n).astype(float)
        if not xi.any():
            continue
        active = [i for i in range(len(B)) if np.linalg.matrix_rank(np.stack([B[i], xi]), tol=1e-9) == 2]
        rank = np.linalg.matrix_rank(A[active], tol=1e-9) if active else 0
        if rank < dv:
            return True
    return False


def green_gradient_2d(x) -> np.ndarray:
    """Kernel of u = G * grad u on R^2: x / (2 pi |x|^2), as a 1 x 2 matrix."""
    x = np.asarray(x, dtype=float)
    return (x / (2 * math.pi * (x @ x)))[None, :]


def green_gradient_3d(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return (x / (4 * math.pi * (x @ x) ** 1.5))[None, :]


def radial_integral(func, n: int, r_max: float, nodes: int = 4000) -> float:
    """int_{R^n} func(|x|) dx by Gauss-Legendre in r."""
    t, w = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * r_max * (t + 1)
    area = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    return float(np.sum(0.5 * r_max * w * func(r) * area * r ** (n - 1)))
