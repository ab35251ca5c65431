from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cancelkit.exact import ExactMatrix, Subspace, as_fraction, format_fraction

from oracles import fraction_rank

small = st.integers(-4, 4)


@st.composite
def matrices(draw, max_rows=4, max_cols=4):
    r = draw(st.integers(1, max_rows))
    c = draw(st.integers(1, max_cols))
    return ExactMatrix([[draw(small) for _ in range(c)] for _ in range(r)], cols=c)


def test_as_fraction_parses_strings_and_rejects_floats_with_noise():
    assert as_fraction("3/4") == Fraction(3, 4)
    assert as_fraction(2) == Fraction(2)
    assert format_fraction(Fraction(-6, 4)) == "-3/2"
    assert format_fraction(Fraction(5)) == "5"


@given(matrices())
def test_rank_matches_independent_elimination(m):
    assert m.rank() == fraction_rank(m.tolist())
    assert m.rank() == np.linalg.matrix_rank(m.to_numpy())


@given(matrices())
def test_nullspace_is_annihilated_and_has_right_dimension(m):
    ns = m.nullspace()
    assert ns.cols == m.cols - m.rank()
    assert (m @ ns).is_zero() if ns.cols else True


@given(matrices())
def test_rref_is_idempotent_and_keeps_row_space(m):
    r, pivots = m.rref()
    r2, pivots2 = r.rref()
    assert r == r2 and pivots == pivots2
    assert ExactMatrix.vstack([m, r]).rank() == m.rank()


@given(st.integers(1, 4).flatmap(lambda n: st.lists(st.lists(small, min_size=n, max_size=n), min_size=n, max_size=n)))
def test_inverse_when_square_and_full_rank(rows):
    m = ExactMatrix(rows, cols=len(rows))
    if m.rank() < m.rows:
        with pytest.raises(ZeroDivisionError):
            m.inverse()
    else:
        assert m @ m.inverse() == ExactMatrix.identity(m.rows)


@given(matrices(max_rows=5, max_cols=3))
def test_left_inverse_of_injective(m):
    if m.rank() == m.cols:
        assert m.left_inverse() @ m == ExactMatrix.identity(m.cols)


@given(matrices(), st.data())
def test_solve_reproduces_right_hand_side(m, data):
    x = ExactMatrix.column([data.draw(small) for _ in range(m.cols)])
    b = m @ x
    sol = m.solve(b)
    assert sol is not None and m @ sol == b


def test_solve_reports_inconsistent_system():
    m = ExactMatrix([[1, 0], [1, 0]])
    assert m.solve(ExactMatrix.column([1, 2])) is None


@given(matrices(max_rows=4, max_cols=4), matrices(max_rows=4, max_cols=4))
def test_subspace_intersection_dimension_formula(m1, m2):
    d = 4
    u = Subspace.span(d, [list(r) + [0] * (d - len(r)) for r in m1.tolist()])
    w = Subspace.span(d, [list(r) + [0] * (d - len(r)) for r in m2.tolist()])
    both = Subspace.span(d, u.vectors() + w.vectors())
    inter = u.intersect(w)
    assert inter.dim == u.dim + w.dim - both.dim
    assert u.contains_subspace(inter) and w.contains_subspace(inter)


@given(matrices(max_rows=3, max_cols=4))
def test_complement_is_orthogonal_and_fills_space(m):
    u = Subspace.span(m.cols, m.tolist())
    c = u.complement()
    assert u.dim + c.dim == m.cols
    for x in u.vectors():
        for y in c.vectors():
            assert sum(a * b for a, b in zip(x, y)) == 0


def test_kernel_and_range_of():
    m = ExactMatrix([[1, 2], [2, 4]])
    assert Subspace.kernel_of(m) == Subspace.span(2, [[2, -1]])
    assert Subspace.range_of(m) == Subspace.span(2, [[1, 2]])
    assert Subspace.zero(3).dim == 0 and Subspace.full(3).dim == 3


def test_shape_mismatch_raises():
    with pytest.raises(ValueError):
        ExactMatrix([[1, 2]]) + ExactMatrix([[1], [2]])
    with pytest.raises(ValueError):
        ExactMatrix([[1, 2]]) @ ExactMatrix([[1, 2]])
