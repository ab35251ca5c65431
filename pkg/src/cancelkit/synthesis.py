"""Exact construction of potentials, annihilators, recovery maps and correction polynomials."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .exact import ExactMatrix, as_fraction, random_vector
from .operator import (
    HomOperator,
    MultiIndex,
    Poly,
    compose_symbols,
    eval_symbol,
    mi_add,
    mi_factorial,
    monomial,
    multi_indices,
    poly_add,
    poly_mul,
    poly_scale,
)
from . import polymat
from .structure import generic_rank, is_cocanceling, symbol_rank

MAX_POTENTIAL_RANK = 3


class SynthesisError(RuntimeError):
    """A construction that is mathematically forced failed its own verification."""


class NotCocancelingError(ValueError):
    pass


@dataclass(frozen=True)
class Potential:
    B: HomOperator
    generic_rank: int
    base_point: tuple[Fraction, ...]
    chosen_rows: tuple[int, ...]


def build_potential(A: HomOperator, seed: int = 0, max_rank: int = MAX_POTENTIAL_RANK) -> HomOperator:
    return potential_details(A, seed, max_rank).B


def potential_details(A: HomOperator, seed: int = 0, max_rank: int = MAX_POTENTIAL_RANK) -> Potential:
    """Operator B(D) from V to V with A(D) B(D) = 0 and generically maximal range.

    With r the generic rank of A, pick a generic point xi*, rows e_1..e_r of
    E whose images c_i = A(xi*)^T e_i are independent, and pivot coordinates C on
    span{c_i}. Writing c_i(xi) = C A(xi)^T e_i,

        B(xi)^T v = det(c_1..c_r) v + sum_i (-1)^i det(Cv, c_1..^c_i..c_r) A(xi)^T e_i,

    an operator of order k*r. The determinant identity for r+1 vectors in an
    r-dimensional space makes e^T A(xi) B(xi) vanish for every e.
    """
    rng = random.Random(seed)
    r = generic_rank(A, rng)
    n, k, dv = A.n, A.k, A.dim_v
    order = k * r
    if r == dv:
        return Potential(HomOperator.zero(n, order, dv, dv), r, (), ())
    if r > max_rank:
        raise ValueError(f"generic rank {r} exceeds the supported maximum {max_rank} for the determinant expansion")
    for _ in range(1000):
        xi_star = random_vector(rng, n)
        if symbol_rank(A, xi_star) == r:
            break
    else:  # pragma: no cover
        raise SynthesisError("no point of generic rank found")
    at_star = eval_symbol(A, xi_star).T
    chosen: list[int] = []
    for j in range(A.dim_e):
        if ExactMatrix.from_columns([at_star.col(i) for i in chosen + [j]], dv).rank() == len(chosen) + 1:
            chosen.append(j)
        if len(chosen) == r:
            break
    if r == 0:
        B = HomOperator.identity(n, dv)
    else:
        coords = _pivot_coordinates(at_star.column_space())  # r x dv
        at_poly = polymat.transpose(polymat.symbol_polymatrix(A))  # dv x de
        images = [[at_poly[t][j] for t in range(dv)] for j in chosen]  # A(xi)^T e_j as columns
        c_cols = [[_dot_const(coords.row(s), col) for s in range(r)] for col in images]
        W = [[c_cols[j][s] for j in range(r)] for s in range(r)]
        det_w = polymat.det(W, n)
        bt: list[list[Poly]] = [[poly_scale(det_w, 1) if a == b else {} for b in range(dv)] for a in range(dv)]
        for i in range(r):
            others = [c_cols[j] for j in range(r) if j != i]
            # expand det(Cv, others) along its first column
            phi: list[Poly] = [{} for _ in range(dv)]
            for t in range(r):
                minor = [[col[s] for col in others] for s in range(r) if s != t]
                m = polymat.det(minor, n)
                if not m:
                    continue
                sign = -1 if t % 2 else 1
                for col_v in range(dv):
                    c = coords[t, col_v]
                    if c:
                        phi[col_v] = poly_add(phi[col_v], poly_scale(m, sign * c))
            sign_i = -1 if (i + 1) % 2 else 1
            for a in range(dv):
                if not images[i][a]:
                    continue
                for b in range(dv):
                    if phi[b]:
                        bt[a][b] = poly_add(bt[a][b], poly_mul(images[i][a], phi[b]), sign_i)
        B = polymat.to_operator(polymat.transpose(bt), n, order, dv, dv)
    if not compose_symbols(A, B).is_zero():
        raise SynthesisError("potential does not annihilate")
    if symbol_rank(B, xi_star) != dv - r:
        raise SynthesisError("potential has the wrong rank at the base point")
    return Potential(B, r, tuple(xi_star), tuple(chosen))


def _pivot_coordinates(basis: ExactMatrix) -> ExactMatrix:
    """Row selector C with C @ basis = I for a column-reduced echelon basis.

    C @ basis = I makes basis @ C a projection onto the span; using pivot rows
    instead of an orthogonal left inverse keeps the coefficients of B small.
    """
    pivots = [next(i for i, x in enumerate(col) if x) for col in basis.columns()]
    C = ExactMatrix([[Fraction(int(j == p)) for j in range(basis.rows)] for p in pivots], cols=basis.rows)
    if C @ basis != ExactMatrix.identity(basis.cols):
        raise SynthesisError("basis is not in column-reduced form")
    return C


def _dot_const(row, polys) -> Poly:
    acc: Poly = {}
    for c, p in zip(row, polys):
        if c and p:
            acc = poly_add(acc, poly_scale(p, c))
    return acc


def annihilators_of_order(A: HomOperator, m: int) -> HomOperator | None:
    """All rows l(D) of order m with l(D) A(D) = 0, echelonised, as one operator."""
    betas = multi_indices(A.n, m)
    gammas = {g: i for i, g in enumerate(multi_indices(A.n, m + A.k))}
    de, dv = A.dim_e, A.dim_v
    rows = [[Fraction(0)] * (len(betas) * de) for _ in range(len(gammas) * dv)]
    for bi, beta in enumerate(betas):
        for alpha, mat in A.terms.items():
            gi = gammas[mi_add(beta, alpha)]
            for e in range(de):
                col = bi * de + e
                for v, c in enumerate(mat.row(e)):
                    if c:
                        rows[gi * dv + v][col] += c
    ns = ExactMatrix(rows, cols=len(betas) * de).nullspace()
    if ns.cols == 0:
        return None
    sol, _ = ns.T.rref()
    sol_rows = [sol.row(i) for i in range(ns.cols)]
    terms = {}
    for bi, beta in enumerate(betas):
        block = [r[bi * de : (bi + 1) * de] for r in sol_rows]
        terms[beta] = ExactMatrix(block, cols=de)
    return HomOperator(A.n, m, de, len(sol_rows), terms)


class InconsistencyError(RuntimeError):
    """Elliptic and canceling operator without an annihilator within the order bound."""


def build_annihilator(A: HomOperator, elliptic_and_canceling: bool = False) -> tuple[HomOperator, int] | None:
    """Smallest-order cocanceling L(D) with L(D) A(D) = 0, searching m <= 2 k dim_v.

    Pass ``elliptic_and_canceling=True`` when A is certified as such: a
    missing annihilator then raises InconsistencyError instead of returning
    None.
    """
    bound = 2 * max(A.k, 1) * A.dim_v
    for m in range(1, bound + 1):
        L = annihilators_of_order(A, m)
        if L is None:
            continue
        if is_cocanceling(L).holds:
            if not compose_symbols(L, A).is_zero():
                raise SynthesisError("annihilator does not annihilate")
            return L, m
    if elliptic_and_canceling:
        raise InconsistencyError(f"no cocanceling annihilator of order <= {bound}")
    return None


@dataclass(frozen=True)
class RecoveryMaps:
    """Maps K_alpha (dim_e x dim_f) with sum_alpha K_alpha L_alpha = id."""

    m: int
    maps: Mapping[MultiIndex, ExactMatrix]
    L: HomOperator

    def identity_residual(self) -> ExactMatrix:
        de = self.L.dim_v
        acc = ExactMatrix.zeros(de, de)
        for alpha, K in self.maps.items():
            acc = acc + K @ self.L.coefficient(alpha)
        return acc - ExactMatrix.identity(de)


def build_recovery(L: HomOperator) -> RecoveryMaps:
    """Left inverse of e -> (L_alpha e)_alpha, split back by alpha."""
    alphas = list(L.terms)
    if not alphas:
        raise NotCocancelingError("zero operator has no recovery maps")
    stacked = ExactMatrix.vstack([L.terms[a] for a in alphas])
    if stacked.rank() < L.dim_v:
        raise NotCocancelingError("stacked coefficient map is not injective")
    K = stacked.left_inverse()
    df = L.dim_e
    maps = {}
    for i, a in enumerate(alphas):
        maps[a] = ExactMatrix([row[i * df : (i + 1) * df] for row in K.tolist()], cols=df)
    rec = RecoveryMaps(L.k, maps, L)
    if not rec.identity_residual().is_zero():
        raise SynthesisError("recovery identity failed")
    return rec


@dataclass(frozen=True)
class CorrectionPolynomial:
    """P(x) = sum_alpha x^alpha / alpha! K_alpha^T, valued in dim_f x dim_e matrices.

    ``coeffs[alpha]`` already includes the 1/alpha! factor.
    """

    m: int
    coeffs: Mapping[MultiIndex, ExactMatrix]

    def evaluate(self, x) -> ExactMatrix:
        x = [as_fraction(c) for c in x]
        mats = list(self.coeffs.values())
        acc = ExactMatrix.zeros(*mats[0].shape)
        for alpha, c in self.coeffs.items():
            acc = acc + c.scale(monomial(x, alpha))
        return acc

    def derivative(self, beta: MultiIndex) -> dict[MultiIndex, ExactMatrix]:
        """d^beta P as a map monomial -> coefficient (monomials x^gamma, not divided by factorials)."""
        out: dict[MultiIndex, ExactMatrix] = {}
        for alpha, c in self.coeffs.items():
            if any(b > a for a, b in zip(alpha, beta)):
                continue
            gamma = tuple(a - b for a, b in zip(alpha, beta))
            term = c.scale(Fraction(mi_factorial(alpha), mi_factorial(gamma)))
            out[gamma] = out[gamma] + term if gamma in out else term
        return out


def apply_adjoint(L: HomOperator, P: CorrectionPolynomial) -> dict[MultiIndex, ExactMatrix]:
    """sum_alpha L_alpha^T d^alpha P, by symbolic differentiation."""
    acc: dict[MultiIndex, ExactMatrix] = {}
    for alpha, La in L.terms.items():
        for gamma, c in P.derivative(alpha).items():
            term = La.T @ c
            acc[gamma] = acc[gamma] + term if gamma in acc else term
    return {g: c for g, c in acc.items() if not c.is_zero()}


def build_correction(K: RecoveryMaps, L: HomOperator) -> CorrectionPolynomial:
    coeffs = {a: Km.T.scale(Fraction(1, mi_factorial(a))) for a, Km in K.maps.items()}
    P = CorrectionPolynomial(K.m, coeffs)
    result = apply_adjoint(L, P)
    zero = (0,) * L.n
    if set(result) != {zero} or result[zero] != ExactMatrix.identity(L.dim_v):
        raise SynthesisError("correction polynomial identity failed")
    return P
