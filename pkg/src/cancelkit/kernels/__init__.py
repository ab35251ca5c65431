"""Quadrature kernels: compiled when available, numpy otherwise.

Set ``CANCELKIT_PURE_PYTHON=1`` to force the numpy versions.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("CANCELKIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels


def weighted_power_sum(values, n: int, N: int, L: float, exponent: float, q: float) -> float:
    vals = np.ascontiguousarray(np.asarray(values, dtype=float).reshape(len(values), -1))
    return float(_impl.weighted_power_sum(vals, int(n), int(N), float(L), float(exponent), float(q)))


def line_integrals(field, L: float, starts, direction, dt: float, steps: int) -> np.ndarray:
    return np.asarray(
        _impl.line_integrals(
            np.ascontiguousarray(field, dtype=float),
            float(L),
            np.ascontiguousarray(starts, dtype=float),
            np.ascontiguousarray(direction, dtype=float),
            float(dt),
            int(steps),
        )
    )


__all__ = ["BACKEND", "weighted_power_sum", "line_integrals"]
