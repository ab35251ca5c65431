"""Exact rational matrices and subspaces.

Everything here works over :class:`fractions.Fraction`, so ranks, kernels and
subspace intersections are decided without floating point thresholds.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

Scalar = Fraction


def as_fraction(x) -> Fraction:
    """Coerce ints, strings ("p/q", "p") and Fractions to a Fraction.

    Floats are rejected on purpose: silently converting 0.1 to its binary
    expansion is never what a caller of the exact layer wants.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def format_fraction(x: Fraction) -> str:
    return str(x)


class ExactMatrix:
    """Immutable dense matrix of Fractions."""

    __slots__ = ("rows", "cols", "_data")

    def __init__(self, data: Iterable[Iterable], cols: int | None = None):
        rows = tuple(tuple(as_fraction(v) for v in row) for row in data)
        if rows:
            width = len(rows[0])
            if any(len(r) != width for r in rows):
                raise ValueError("ragged matrix")
            if cols is not None and cols != width:
                raise ValueError("column count mismatch")
        else:
            if cols is None:
                raise ValueError("empty matrix needs an explicit column count")
            width = cols
        self.rows = len(rows)
        self.cols = width
        self._data = rows

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, rows: int, cols: int) -> "ExactMatrix":
        return cls([[0] * cols for _ in range(rows)], cols=cols)

    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], cols=n)

    @classmethod
    def column(cls, vec: Sequence) -> "ExactMatrix":
        return cls([[v] for v in vec], cols=1)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], rows: int) -> "ExactMatrix":
        if not columns:
            return cls.zeros(rows, 0)
        return cls([[c[i] for c in columns] for i in range(rows)], cols=len(columns))

    @classmethod
    def hstack(cls, mats: Sequence["ExactMatrix"]) -> "ExactMatrix":
        rows = mats[0].rows
        if any(m.rows != rows for m in mats):
            raise ValueError("hstack: row counts differ")
        data = [sum((m._data[i] for m in mats), ()) for i in range(rows)]
        return cls(data, cols=sum(m.cols for m in mats))

    @classmethod
    def vstack(cls, mats: Sequence["ExactMatrix"]) -> "ExactMatrix":
        cols = mats[0].cols
        if any(m.cols != cols for m in mats):
            raise ValueError("vstack: column counts differ")
        return cls([r for m in mats for r in m._data], cols=cols)

    # access -------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, idx):
        i, j = idx
        return self._data[i][j]

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self._data[i]

    def col(self, j: int) -> tuple[Fraction, ...]:
        return tuple(r[j] for r in self._data)

    def tolist(self) -> list[list[Fraction]]:
        return [list(r) for r in self._data]

    def columns(self) -> list[tuple[Fraction, ...]]:
        return [self.col(j) for j in range(self.cols)]

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self._data], dtype=float).reshape(
            self.rows, self.cols
        )

    def to_strings(self) -> list[list[str]]:
        return [[format_fraction(v) for v in r] for r in self._data]

    # algebra ------------------------------------------------------------
    @property
    def T(self) -> "ExactMatrix":
        return ExactMatrix(zip(*self._data), cols=self.rows) if self.rows else ExactMatrix.zeros(self.cols, 0)

    def __add__(self, other: "ExactMatrix") -> "ExactMatrix":
        self._same_shape(other)
        return ExactMatrix(
            ([a + b for a, b in zip(r, s)] for r, s in zip(self._data, other._data)), cols=self.cols
        )

    def __sub__(self, other: "ExactMatrix") -> "ExactMatrix":
        self._same_shape(other)
        return ExactMatrix(
            ([a - b for a, b in zip(r, s)] for r, s in zip(self._data, other._data)), cols=self.cols
        )

    def __neg__(self) -> "ExactMatrix":
        return ExactMatrix(([-a for a in r] for r in self._data), cols=self.cols)

    def scale(self, c) -> "ExactMatrix":
        c = as_fraction(c)
        return ExactMatrix(([c * a for a in r] for r in self._data), cols=self.cols)

    def __matmul__(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.cols != other.rows:
            raise ValueError(f"matmul shape mismatch {self.shape} @ {other.shape}")
        ocols = other.columns()
        out = []
        for r in self._data:
            out.append([sum((a * b for a, b in zip(r, c) if a and b), Fraction(0)) for c in ocols])
        return ExactMatrix(out, cols=other.cols)

    def apply(self, vec: Sequence) -> tuple[Fraction, ...]:
        if len(vec) != self.cols:
            raise ValueError("vector length mismatch")
        v = [as_fraction(x) for x in vec]
        return tuple(sum((a * b for a, b in zip(r, v) if a and b), Fraction(0)) for r in self._data)

    def _same_shape(self, other: "ExactMatrix") -> None:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")

    def __eq__(self, other) -> bool:
        return isinstance(other, ExactMatrix) and self.shape == other.shape and self._data == other._data

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self._data))

    def __repr__(self) -> str:
        body = "; ".join(" ".join(format_fraction(v) for v in r) for r in self._data)
        return f"ExactMatrix({self.rows}x{self.cols}: [{body}])"

    def is_zero(self) -> bool:
        return all(v == 0 for r in self._data for v in r)

    # elimination --------------------------------------------------------
    def rref(self) -> tuple["ExactMatrix", tuple[int, ...]]:
        """Reduced row echelon form and pivot columns."""
        m = [list(r) for r in self._data]
        pivots = []
        prow = 0
        for c in range(self.cols):
            if prow == self.rows:
                break
            sel = next((i for i in range(prow, self.rows) if m[i][c] != 0), None)
            if sel is None:
                continue
            m[prow], m[sel] = m[sel], m[prow]
            inv = 1 / m[prow][c]
            m[prow] = [v * inv for v in m[prow]]
            for i in range(self.rows):
                if i != prow and m[i][c] != 0:
                    f = m[i][c]
                    pr = m[prow]
                    m[i] = [a - f * b for a, b in zip(m[i], pr)]
            pivots.append(c)
            prow += 1
        return ExactMatrix(m, cols=self.cols), tuple(pivots)

    def rank(self) -> int:
        return len(self.rref()[1])

    def nullspace(self) -> "ExactMatrix":
        """Basis of the kernel as columns (cols x nullity)."""
        r, pivots = self.rref()
        free = [c for c in range(self.cols) if c not in pivots]
        basis = []
        for f in free:
            v = [Fraction(0)] * self.cols
            v[f] = Fraction(1)
            for i, p in enumerate(pivots):
                v[p] = -r[i, f]
            basis.append(v)
        return ExactMatrix.from_columns(basis, self.cols)

    def column_space(self) -> "ExactMatrix":
        """Column-reduced echelon basis of the range (rows x rank)."""
        r, pivots = self.T.rref()
        return ExactMatrix([r.row(i) for i in range(len(pivots))], cols=self.rows).T if pivots else (
            ExactMatrix.zeros(self.rows, 0)
        )

    def inverse(self) -> "ExactMatrix":
        if self.rows != self.cols:
            raise ValueError("inverse of a non-square matrix")
        aug = ExactMatrix.hstack([self, ExactMatrix.identity(self.rows)])
        r, pivots = aug.rref()
        if pivots[: self.rows] != tuple(range(self.rows)):
            raise ZeroDivisionError("matrix is singular")
        return ExactMatrix([row[self.cols :] for row in r._data], cols=self.rows)

    def left_inverse(self) -> "ExactMatrix":
        """(M^T M)^{-1} M^T; requires full column rank."""
        mt = self.T
        return (mt @ self).inverse() @ mt

    def solve(self, rhs: "ExactMatrix") -> "ExactMatrix | None":
        """One exact solution X of self @ X = rhs, or None if inconsistent."""
        aug = ExactMatrix.hstack([self, rhs])
        r, pivots = aug.rref()
        if any(p >= self.cols for p in pivots):
            return None
        x = [[Fraction(0)] * rhs.cols for _ in range(self.cols)]
        for i, p in enumerate(pivots):
            for j in range(rhs.cols):
                x[p][j] = r[i, self.cols + j]
        return ExactMatrix(x, cols=rhs.cols)


class Subspace:
    """Linear subspace of Q^d with a canonical column-reduced echelon basis."""

    __slots__ = ("ambient_dim", "basis")

    def __init__(self, ambient_dim: int, basis: ExactMatrix):
        if basis.rows != ambient_dim:
            raise ValueError("basis rows must equal the ambient dimension")
        self.ambient_dim = ambient_dim
        self.basis = basis.column_space() if basis.cols else ExactMatrix.zeros(ambient_dim, 0)

    @classmethod
    def span(cls, ambient_dim: int, vectors: Iterable[Sequence]) -> "Subspace":
        vecs = [list(v) for v in vectors]
        return cls(ambient_dim, ExactMatrix.from_columns(vecs, ambient_dim))

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, ExactMatrix.zeros(ambient_dim, 0))

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, ExactMatrix.identity(ambient_dim))

    @classmethod
    def range_of(cls, m: ExactMatrix) -> "Subspace":
        return cls(m.rows, m)

    @classmethod
    def kernel_of(cls, m: ExactMatrix) -> "Subspace":
        return cls(m.cols, m.nullspace())

    @property
    def dim(self) -> int:
        return self.basis.cols

    def vectors(self) -> list[tuple[Fraction, ...]]:
        return self.basis.columns()

    def contains(self, vec: Sequence) -> bool:
        if self.dim == 0:
            return all(as_fraction(v) == 0 for v in vec)
        return self.basis.solve(ExactMatrix.column(vec)) is not None

    def contains_subspace(self, other: "Subspace") -> bool:
        return all(self.contains(v) for v in other.vectors())

    def intersect(self, other: "Subspace") -> "Subspace":
        if self.ambient_dim != other.ambient_dim:
            raise ValueError("ambient dimensions differ")
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.ambient_dim)
        joint = ExactMatrix.hstack([self.basis, -other.basis])
        ker = joint.nullspace()
        coeffs = ExactMatrix([ker.row(i) for i in range(self.dim)], cols=ker.cols)
        return Subspace(self.ambient_dim, self.basis @ coeffs)

    def complement(self) -> "Subspace":
        """Orthogonal complement for the standard dot product."""
        if self.dim == 0:
            return Subspace.full(self.ambient_dim)
        return Subspace(self.ambient_dim, self.basis.T.nullspace())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Subspace)
            and self.ambient_dim == other.ambient_dim
            and self.basis == other.basis
        )

    def __hash__(self) -> int:
        return hash((self.ambient_dim, self.basis))

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim} in Q^{self.ambient_dim})"


def random_rational(rng: random.Random, bound: int = 10**6) -> Fraction:
    return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


def random_vector(rng: random.Random, n: int, bound: int = 10**6) -> tuple[Fraction, ...]:
    """Nonzero random rational vector with numerators/denominators <= bound."""
    while True:
        v = tuple(random_rational(rng, bound) for _ in range(n))
        if any(v):
            return v


def dot(u: Sequence, v: Sequence) -> Fraction:
    return sum((as_fraction(a) * as_fraction(b) for a, b in zip(u, v)), Fraction(0))
