"""Homogeneous constant-coefficient operators stored by their matrix symbols.

An operator of order ``k`` on R^n from V = Q^dim_v to E = Q^dim_e is the
finite map ``alpha -> A_alpha`` over multi-indices with ``|alpha| = k``; its
symbol is ``A(xi) = sum_alpha xi^alpha A_alpha``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exact import ExactMatrix, Subspace, as_fraction

MultiIndex = tuple[int, ...]


class OperatorSpecError(ValueError):
    """Malformed operator-spec document; ``location`` points at the offending field."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.message = message
        self.location = location


@lru_cache(maxsize=None)
def multi_indices(n: int, k: int) -> tuple[MultiIndex, ...]:
    """All alpha in N^n with |alpha| = k, lexicographically descending."""
    if n == 0:
        return ((),) if k == 0 else ()
    out = []
    for first in range(k, -1, -1):
        for rest in multi_indices(n - 1, k - first):
            out.append((first,) + rest)
    return tuple(out)


def mi_factorial(alpha: MultiIndex) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def monomial(xi: Sequence[Fraction], alpha: MultiIndex) -> Fraction:
    out = Fraction(1)
    for x, a in zip(xi, alpha):
        if a:
            out *= x**a
    return out


def mi_add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


# Sparse polynomials: dict MultiIndex -> Fraction ------------------------------
Poly = dict


def poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for a, x in p.items():
        for b, y in q.items():
            g = mi_add(a, b)
            out[g] = out.get(g, 0) + x * y
    return {g: c for g, c in out.items() if c != 0}


def poly_add(p: Poly, q: Poly, sign: int = 1) -> Poly:
    out = dict(p)
    for g, c in q.items():
        out[g] = out.get(g, 0) + sign * c
    return {g: c for g, c in out.items() if c != 0}


def poly_scale(p: Poly, c) -> Poly:
    c = as_fraction(c)
    return {g: v * c for g, v in p.items() if v * c != 0} if c else {}


def linear_form_power(row: Sequence[Fraction], power: int, n_new: int) -> Poly:
    """(sum_j row[j] t_j)^power as a polynomial in n_new variables."""
    lin = {tuple(1 if i == j else 0 for i in range(n_new)): as_fraction(c) for j, c in enumerate(row) if c}
    out: Poly = {(0,) * n_new: Fraction(1)}
    for _ in range(power):
        out = poly_mul(out, lin)
    return out


@dataclass(frozen=True)
class HomOperator:
    """Homogeneous operator ``A(D) = sum_{|alpha|=k} A_alpha d^alpha``.

    Missing multi-indices are zero coefficients. Instances are immutable.
    """

    n: int
    k: int
    dim_v: int
    dim_e: int
    terms: Mapping[MultiIndex, ExactMatrix] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.k < 0 or self.dim_v < 1 or self.dim_e < 1:
            raise ValueError("n, dim_v, dim_e must be positive and k nonnegative")
        clean = {}
        for alpha, mat in self.terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n or any(a < 0 for a in alpha):
                raise ValueError(f"multi-index {alpha} invalid for n={self.n}")
            if sum(alpha) != self.k:
                raise ValueError(f"multi-index {alpha} has order {sum(alpha)} != k={self.k}")
            if mat.shape != (self.dim_e, self.dim_v):
                raise ValueError(f"coefficient for {alpha} has shape {mat.shape}, expected {(self.dim_e, self.dim_v)}")
            if alpha in clean:
                mat = clean[alpha] + mat
            clean[alpha] = mat
        object.__setattr__(self, "terms", {a: m for a, m in sorted(clean.items(), reverse=True) if not m.is_zero()})

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls, n: int, k: int, dim_v: int, dim_e: int) -> "HomOperator":
        return cls(n, k, dim_v, dim_e, {})

    @classmethod
    def identity(cls, n: int, dim: int) -> "HomOperator":
        return cls(n, 0, dim, dim, {(0,) * n: ExactMatrix.identity(dim)})

    @classmethod
    def from_lists(cls, n: int, k: int, dim_v: int, dim_e: int, terms: Mapping) -> "HomOperator":
        return cls(n, k, dim_v, dim_e, {tuple(a): ExactMatrix(m, cols=dim_v) for a, m in terms.items()})

    def coefficient(self, alpha: MultiIndex) -> ExactMatrix:
        return self.terms.get(tuple(alpha), ExactMatrix.zeros(self.dim_e, self.dim_v))

    def is_zero(self) -> bool:
        return not self.terms

    # numeric views ------------------------------------------------------
    def float_terms(self) -> tuple[np.ndarray, np.ndarray]:
        """(alphas int array (T, n), coefficients float array (T, dim_e, dim_v))."""
        if not self.terms:
            return np.zeros((0, self.n), dtype=int), np.zeros((0, self.dim_e, self.dim_v))
        alphas = np.array(list(self.terms), dtype=int)
        coeffs = np.stack([m.to_numpy() for m in self.terms.values()])
        return alphas, coeffs

    def numeric_symbol(self, xi: np.ndarray) -> np.ndarray:
        """Vectorised A(xi) for float xi of shape (..., n); returns (..., dim_e, dim_v)."""
        xi = np.asarray(xi, dtype=float)
        alphas, coeffs = self.float_terms()
        out = np.zeros(xi.shape[:-1] + (self.dim_e, self.dim_v))
        for alpha, c in zip(alphas, coeffs):
            mono = np.ones(xi.shape[:-1])
            for j, a in enumerate(alpha):
                if a:
                    mono = mono * xi[..., j] ** a
            out += mono[..., None, None] * c
        return out

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "dimV": self.dim_v,
            "dimE": self.dim_e,
            "terms": [{"alpha": list(a), "matrix": m.to_strings()} for a, m in self.terms.items()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "HomOperator":
        if not isinstance(doc, Mapping):
            raise OperatorSpecError("document must be a JSON object", "$")
        for key in ("n", "k", "dimV", "dimE", "terms"):
            if key not in doc:
                raise OperatorSpecError(f"missing key {key!r}", "$")
            if key != "terms" and (not isinstance(doc[key], int) or isinstance(doc[key], bool)):
                raise OperatorSpecError("must be an integer", f"$.{key}")
        n, k, dv, de = doc["n"], doc["k"], doc["dimV"], doc["dimE"]
        if n < 1 or k < 0 or dv < 1 or de < 1:
            raise OperatorSpecError("dimensions must be positive", "$")
        if not isinstance(doc["terms"], list):
            raise OperatorSpecError("must be a list", "$.terms")
        terms: dict[MultiIndex, ExactMatrix] = {}
        for i, t in enumerate(doc["terms"]):
            loc = f"$.terms[{i}]"
            if not isinstance(t, Mapping) or "alpha" not in t or "matrix" not in t:
                raise OperatorSpecError("term needs 'alpha' and 'matrix'", loc)
            alpha = t["alpha"]
            if not isinstance(alpha, list) or len(alpha) != n or not all(isinstance(a, int) and a >= 0 for a in alpha):
                raise OperatorSpecError(f"alpha must be {n} nonnegative integers", loc + ".alpha")
            if sum(alpha) != k:
                raise OperatorSpecError(f"|alpha| = {sum(alpha)} but k = {k}", loc + ".alpha")
            mat = t["matrix"]
            if not isinstance(mat, list) or len(mat) != de or not all(isinstance(r, list) and len(r) == dv for r in mat):
                raise OperatorSpecError(f"matrix must be {de}x{dv}", loc + ".matrix")
            try:
                m = ExactMatrix(mat, cols=dv)
            except (ValueError, TypeError, ZeroDivisionError) as exc:
                raise OperatorSpecError(f"bad rational entry ({exc})", loc + ".matrix") from exc
            key = tuple(alpha)
            terms[key] = terms[key] + m if key in terms else m
        return cls(n, k, dv, de, terms)

    @classmethod
    def load(cls, path: str | Path) -> "HomOperator":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise OperatorSpecError(f"invalid JSON ({exc.msg})", f"{path}:{exc.lineno}:{exc.colno}") from exc
        try:
            return cls.from_dict(doc)
        except OperatorSpecError as exc:
            raise OperatorSpecError(exc.message, f"{path}:{exc.location}" if exc.location else str(path)) from exc


def _check_xi(A: HomOperator, xi: Sequence) -> list[Fraction]:
    if len(xi) != A.n:
        raise ValueError(f"xi has length {len(xi)}, operator lives on R^{A.n}")
    return [as_fraction(x) for x in xi]


def eval_symbol(A: HomOperator, xi: Sequence) -> ExactMatrix:
    """Exact A(xi) = sum xi^alpha A_alpha."""
    xi = _check_xi(A, xi)
    acc = [[Fraction(0)] * A.dim_v for _ in range(A.dim_e)]
    for alpha, mat in A.terms.items():
        c = monomial(xi, alpha)
        if c == 0:
            continue
        for i in range(A.dim_e):
            row = mat.row(i)
            acc_i = acc[i]
            for j in range(A.dim_v):
                if row[j]:
                    acc_i[j] += c * row[j]
    return ExactMatrix(acc, cols=A.dim_v)


def adjoint_symbol(A: HomOperator, xi: Sequence) -> ExactMatrix:
    """A(xi)^* for the standard inner products on V and E."""
    return eval_symbol(A, xi).T


def compose_symbols(A: HomOperator, B: HomOperator) -> HomOperator:
    """Symbol of A(D) o B(D): C_gamma = sum_{alpha+beta=gamma} A_alpha B_beta."""
    if A.n != B.n:
        raise ValueError("operators live on different spaces")
    if A.dim_v != B.dim_e:
        raise ValueError(f"cannot compose: A takes dim {A.dim_v}, B produces dim {B.dim_e}")
    terms: dict[MultiIndex, ExactMatrix] = {}
    for a, ma in A.terms.items():
        for b, mb in B.terms.items():
            g = mi_add(a, b)
            prod = ma @ mb
            terms[g] = terms[g] + prod if g in terms else prod
    return HomOperator(A.n, A.k + B.k, B.dim_v, A.dim_e, terms)


def substitute(A: HomOperator, T: ExactMatrix) -> HomOperator:
    """Operator on R^m with symbol xi' -> A(T xi'), for T of shape (A.n, m)."""
    if T.rows != A.n:
        raise ValueError(f"substitution matrix must have {A.n} rows")
    m = T.cols
    if m == 0:
        raise ValueError("substitution into a zero-dimensional space")
    rows = [T.row(i) for i in range(A.n)]
    powers: dict[tuple[int, int], Poly] = {}
    terms: dict[MultiIndex, list[list[Fraction]]] = {}
    for alpha, mat in A.terms.items():
        poly: Poly = {(0,) * m: Fraction(1)}
        for i, a in enumerate(alpha):
            if a:
                key = (i, a)
                if key not in powers:
                    powers[key] = linear_form_power(rows[i], a, m)
                poly = poly_mul(poly, powers[key])
        for g, c in poly.items():
            acc = terms.setdefault(g, [[Fraction(0)] * A.dim_v for _ in range(A.dim_e)])
            for i in range(A.dim_e):
                for j, v in enumerate(mat.row(i)):
                    if v:
                        acc[i][j] += c * v
    return HomOperator(m, A.k, A.dim_v, A.dim_e, {g: ExactMatrix(v, cols=A.dim_v) for g, v in terms.items()})


def restrict_to_subspace(A: HomOperator, Pi: Subspace) -> HomOperator:
    """A'(xi') = A(sum_j xi'_j b_j) in the coordinates of Pi's stored basis.

    No orthonormalisation: this is an invertible reparametrisation of Pi, so
    ellipticity and cancellation verdicts are unaffected.
    """
    if Pi.ambient_dim != A.n:
        raise ValueError(f"subspace lives in Q^{Pi.ambient_dim}, operator on R^{A.n}")
    if Pi.dim == 0:
        raise ValueError("cannot restrict to the trivial subspace")
    return substitute(A, Pi.basis)


def operators_equal(A: HomOperator, B: HomOperator) -> bool:
    return (A.n, A.k, A.dim_v, A.dim_e) == (B.n, B.k, B.dim_v, B.dim_e) and dict(A.terms) == dict(B.terms)


def stack_operators(ops: Iterable[HomOperator]) -> HomOperator:
    """Direct sum in the target: (A_1(D)u, ..., A_r(D)u)."""
    ops = list(ops)
    first = ops[0]
    if any((o.n, o.k, o.dim_v) != (first.n, first.k, first.dim_v) for o in ops):
        raise ValueError("stacked operators must share n, k and dim_v")
    alphas = set().union(*(o.terms for o in ops))
    terms = {a: ExactMatrix.vstack([o.coefficient(a) for o in ops]) for a in alphas}
    return HomOperator(first.n, first.k, first.dim_v, sum(o.dim_e for o in ops), terms)
