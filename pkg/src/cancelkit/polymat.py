"""Matrices whose entries are sparse homogeneous polynomials.

Used where a symbol has to be manipulated as a polynomial object rather than
evaluated pointwise: determinant expansions and exact minor checks.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .exact import ExactMatrix
from .operator import HomOperator, MultiIndex, Poly, poly_add, poly_mul, poly_scale

PolyMatrix = list  # list[list[Poly]]


def symbol_polymatrix(A: HomOperator) -> PolyMatrix:
    out = [[{} for _ in range(A.dim_v)] for _ in range(A.dim_e)]
    for alpha, mat in A.terms.items():
        for i in range(A.dim_e):
            for j, v in enumerate(mat.row(i)):
                if v:
                    out[i][j][alpha] = v
    return out


def transpose(pm: PolyMatrix) -> PolyMatrix:
    return [list(col) for col in zip(*pm)]


def const_times(C: ExactMatrix, pm: PolyMatrix) -> PolyMatrix:
    """C @ pm for a constant matrix C."""
    cols = len(pm[0]) if pm else 0
    out = []
    for i in range(C.rows):
        row = []
        for j in range(cols):
            acc: Poly = {}
            for t, c in enumerate(C.row(i)):
                if c:
                    acc = poly_add(acc, poly_scale(pm[t][j], c))
            row.append(acc)
        out.append(row)
    return out


def _perm_sign(p: tuple[int, ...]) -> int:
    sign = 1
    seen = list(p)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def det(pm: PolyMatrix, n_vars: int) -> Poly:
    """Leibniz expansion; the empty determinant is 1."""
    size = len(pm)
    if size == 0:
        return {(0,) * n_vars: Fraction(1)}
    if any(len(r) != size for r in pm):
        raise ValueError("determinant of a non-square polynomial matrix")
    total: Poly = {}
    for perm in itertools.permutations(range(size)):
        term: Poly = {(0,) * n_vars: Fraction(1)}
        for i, j in enumerate(perm):
            term = poly_mul(term, pm[i][j])
            if not term:
                break
        if term:
            total = poly_add(total, term, _perm_sign(perm))
    return total


def to_operator(pm: PolyMatrix, n: int, k: int, dim_v: int, dim_e: int) -> HomOperator:
    """Collect coefficients by monomial; every monomial must have degree k."""
    terms: dict[MultiIndex, list[list[Fraction]]] = {}
    for i, row in enumerate(pm):
        for j, p in enumerate(row):
            for alpha, c in p.items():
                acc = terms.setdefault(alpha, [[Fraction(0)] * dim_v for _ in range(dim_e)])
                acc[i][j] += c
    return HomOperator(n, k, dim_v, dim_e, {a: ExactMatrix(v, cols=dim_v) for a, v in terms.items()})


def all_minors_vanish(A: HomOperator, size: int) -> bool:
    """True iff every size x size minor of A(xi) is the zero polynomial."""
    pm = symbol_polymatrix(A)
    for rows in itertools.combinations(range(A.dim_e), size):
        for cols in itertools.combinations(range(A.dim_v), size):
            sub = [[pm[r][c] for c in cols] for r in rows]
            if det(sub, A.n):
                return False
    return True
