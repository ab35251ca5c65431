import os
import subprocess
import sys

import numpy as np
import pytest

from cancelkit import kernels
from cancelkit.kernels import _pykernels

ckernels = pytest.importorskip("cancelkit.kernels._ckernels")


@pytest.mark.parametrize("n,N,d", [(1, 64, 1), (2, 32, 3), (3, 16, 2)])
@pytest.mark.parametrize("exponent,q", [(0.0, 1.0), (1.0, 1.0), (1.5, 1.5), (2.5, 2.0)])
def test_weighted_power_sum_parity(n, N, d, exponent, q):
    rng = np.random.default_rng(n * 100 + N)
    vals = rng.normal(size=(d, N**n))
    vals[:, ::7] = 0.0
    a = _pykernels.weighted_power_sum(vals, n, N, 3.0, exponent, q)
    b = ckernels.weighted_power_sum(vals, n, N, 3.0, exponent, q)
    assert b == pytest.approx(a, rel=1e-12)


def test_line_integrals_parity():
    rng = np.random.default_rng(0)
    field = rng.random((48, 48))
    starts = rng.uniform(-4, 4, size=(200, 2))
    direction = np.array([0.6, 0.8])
    a = _pykernels.line_integrals(field, 3.0, starts, direction, 0.05, 300)
    b = ckernels.line_integrals(field, 3.0, starts, direction, 0.05, 300)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14)
    assert np.any(a > 0)


def test_line_integral_of_constant():
    # zero nodes past the edge make the linear ramps add up to the box width
    field = np.ones((32, 32))
    L = 2.0
    out = _pykernels.line_integrals(field, L, np.array([[-3.0, 0.0]]), np.array([1.0, 0.0]), 0.001, 6001)
    assert out[0] == pytest.approx(2 * L, abs=0.01)


def test_backend_selection():
    assert kernels.BACKEND == ("python" if os.environ.get("CANCELKIT_PURE_PYTHON") else "cython")
    env = dict(os.environ, CANCELKIT_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from cancelkit import kernels; print(kernels.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "python"
