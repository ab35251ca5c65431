import json
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cancelkit.exact import ExactMatrix, Subspace, random_vector
from cancelkit.operator import (
    HomOperator,
    OperatorSpecError,
    adjoint_symbol,
    compose_symbols,
    eval_symbol,
    multi_indices,
    operators_equal,
    restrict_to_subspace,
    stack_operators,
)

from oracles import random_operator, symbol_by_hand

GRAD = HomOperator.from_lists(2, 1, 1, 2, {(1, 0): [[1], [0]], (0, 1): [[0], [1]]})
DIV = HomOperator.from_lists(2, 1, 2, 1, {(1, 0): [[1, 0]], (0, 1): [[0, 1]]})
CURL = HomOperator.from_lists(2, 1, 2, 1, {(1, 0): [[0, 1]], (0, 1): [[-1, 0]]})
D1D2 = HomOperator.from_lists(3, 1, 1, 2, {(1, 0, 0): [[1], [0]], (0, 1, 0): [[0], [1]]})


@st.composite
def operators(draw, max_n=3, max_k=2, max_dim=3):
    seed = draw(st.integers(0, 10**6))
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(0, max_k))
    return random_operator(random.Random(seed), n, k, draw(st.integers(1, max_dim)), draw(st.integers(1, max_dim)))


def test_multi_index_count():
    for n in range(1, 4):
        for k in range(4):
            assert len(multi_indices(n, k)) == math.comb(n + k - 1, k)


def test_gradient_symbol_is_xi():
    assert eval_symbol(GRAD, [3, 4]) == ExactMatrix([[3], [4]])
    assert adjoint_symbol(GRAD, [3, 4]) == ExactMatrix([[3, 4]])


def test_symbol_vanishes_at_origin():
    A = random_operator(random.Random(1), 3, 2, 2, 3)
    assert eval_symbol(A, [0, 0, 0]).is_zero()


def test_block_example_symbol(catalog):
    A = catalog["block_r4"].operator
    assert eval_symbol(A, [1, 2, 3, 4]) == ExactMatrix([[1, 0], [0, 2], [3, -4], [4, 3]])
    assert adjoint_symbol(A, [0, 0, 1, 0]) == eval_symbol(A, [0, 0, 1, 0]).T


@given(operators(), st.integers(0, 10**6))
def test_symbol_matches_hand_expansion_and_numeric(A, seed):
    xi = random_vector(random.Random(seed), A.n, bound=50)
    exact = eval_symbol(A, xi)
    assert exact.tolist() == symbol_by_hand(A, xi)
    num = A.numeric_symbol(np.array([float(x) for x in xi]))
    assert np.allclose(num, exact.to_numpy(), rtol=1e-12, atol=1e-9)


@given(operators(), st.integers(0, 10**6), st.fractions(min_value=-5, max_value=5, max_denominator=7))
def test_homogeneity_exact(A, seed, t):
    xi = random_vector(random.Random(seed), A.n, bound=50)
    lhs = eval_symbol(A, [t * x for x in xi])
    assert lhs == eval_symbol(A, xi).scale(t**A.k)


@given(st.integers(0, 10**6))
def test_composition_soundness(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 3)
    dims = [rng.randint(1, 3) for _ in range(3)]
    A = random_operator(rng, n, rng.randint(0, 2), dims[1], dims[2])
    B = random_operator(rng, n, rng.randint(0, 2), dims[0], dims[1])
    C = compose_symbols(A, B)
    assert C.k == A.k + B.k
    for _ in range(5):
        xi = random_vector(rng, n, bound=30)
        assert eval_symbol(C, xi) == eval_symbol(A, xi) @ eval_symbol(B, xi)


def test_curl_of_gradient_vanishes():
    # curl takes (u1, u2) to d1 u2 - d2 u1; composing with the gradient gives zero
    C = compose_symbols(CURL, GRAD)
    assert C.is_zero() and C.k == 2


def test_div_grad_is_laplacian():
    lap = HomOperator.from_lists(2, 2, 1, 1, {(2, 0): [[1]], (0, 2): [[1]]})
    assert operators_equal(compose_symbols(DIV, GRAD), lap)


def test_compose_with_identity():
    A = random_operator(random.Random(3), 2, 2, 2, 3)
    assert operators_equal(compose_symbols(A, HomOperator.identity(2, 2)), A)


def test_restriction_examples():
    plane = Subspace.span(3, [[1, 0, 0], [0, 1, 0]])
    assert operators_equal(restrict_to_subspace(D1D2, plane), GRAD)
    assert restrict_to_subspace(D1D2, Subspace.span(3, [[0, 0, 1]])).is_zero()
    assert operators_equal(restrict_to_subspace(D1D2, Subspace.full(3)), D1D2)


@given(operators(max_n=3), st.integers(0, 10**6))
def test_restriction_soundness(A, seed):
    rng = random.Random(seed)
    vecs = [random_vector(rng, A.n, bound=5) for _ in range(rng.randint(1, A.n))]
    Pi = Subspace.span(A.n, vecs)
    R = restrict_to_subspace(A, Pi)
    basis = Pi.vectors()
    for _ in range(3):
        eta = random_vector(rng, Pi.dim, bound=20)
        embedded = [sum(e * b[i] for e, b in zip(eta, basis)) for i in range(A.n)]
        assert eval_symbol(R, eta) == eval_symbol(A, embedded)


@given(operators())
def test_json_round_trip(A):
    assert operators_equal(HomOperator.from_dict(json.loads(A.to_json())), A)


def test_rationals_serialise_as_strings(tmp_path):
    A = HomOperator.from_lists(1, 1, 1, 1, {(1,): [["-3/4"]]})
    doc = A.to_dict()
    assert doc["terms"][0]["matrix"] == [["-3/4"]]
    path = tmp_path / "op.json"
    path.write_text(A.to_json())
    assert HomOperator.load(path).coefficient((1,)) == ExactMatrix([[Fraction(-3, 4)]])


@pytest.mark.parametrize(
    "doc, location",
    [
        ([], "$"),
        ({"n": 2, "k": 1, "dimV": 1, "dimE": 1}, "$"),
        ({"n": "2", "k": 1, "dimV": 1, "dimE": 1, "terms": []}, "$.n"),
        ({"n": 2, "k": 1, "dimV": 1, "dimE": 1, "terms": {}}, "$.terms"),
        ({"n": 2, "k": 1, "dimV": 1, "dimE": 1, "terms": [{"alpha": [1, 0]}]}, "$.terms[0]"),
        ({"n": 2, "k": 1, "dimV": 1, "dimE": 1, "terms": [{"alpha": [2, 0], "matrix": [["1"]]}]}, "$.terms[0].alpha"),
        ({"n": 2, "k": 1, "dimV": 1, "dimE": 1, "terms": [{"alpha": [1, 0], "matrix": [["1", "2"]]}]}, "$.terms[0].matrix"),
        ({"n": 2, "k": 1, "dimV": 1, "dimE": 1, "terms": [{"alpha": [1, 0], "matrix": [["x"]]}]}, "$.terms[0].matrix"),
    ],
)
def test_malformed_spec_reports_location(doc, location):
    with pytest.raises(OperatorSpecError) as info:
        HomOperator.from_dict(doc)
    assert info.value.location == location


def test_invalid_json_points_at_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"n": 2,\n "k": }')
    with pytest.raises(OperatorSpecError) as info:
        HomOperator.load(path)
    assert info.value.location.endswith(":2:7")


def test_stack_operators_concatenates_targets():
    S = stack_operators([GRAD, GRAD])
    assert S.dim_e == 4
    assert eval_symbol(S, [1, 2]) == ExactMatrix([[1], [2], [1], [2]])


def test_wrong_xi_length():
    with pytest.raises(ValueError):
        eval_symbol(GRAD, [1, 2, 3])
