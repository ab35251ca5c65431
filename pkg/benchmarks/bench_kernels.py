"""Timing of the compiled quadrature kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so the environment switch does not
matter here. Results are printed as a small table; outputs are also compared.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from cancelkit.kernels import _pykernels

try:
    from cancelkit.kernels import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None


def cases(rng):
    for n, N, d in ((2, 256, 2), (3, 64, 3), (4, 32, 6)):
        vals = np.ascontiguousarray(rng.normal(size=(d, N**n)))
        args = (vals, n, N, 8.0, n - 1.0, 1.0)
        yield f"weighted_power_sum n={n} N={N} d={d}", "weighted_power_sum", args
    field = rng.random((128, 128))
    starts = np.ascontiguousarray(rng.uniform(-8, 8, size=(512, 2)))
    direction = np.array([0.6, 0.8])
    yield "line_integrals 512 lines x 2000 steps", "line_integrals", (field, 6.0, starts, direction, 0.01, 2000)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels are not built; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'case':42s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s} {'max rel diff':>13s}")
    for label, fname, fargs in cases(rng):
        py, cy = getattr(_pykernels, fname), getattr(_ckernels, fname)
        t_py = min(timeit.repeat(lambda: py(*fargs), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: cy(*fargs), number=1, repeat=args.repeat))
        a, b = np.asarray(py(*fargs)), np.asarray(cy(*fargs))
        diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
        print(f"{label:42s} {1e3 * t_py:12.2f} {1e3 * t_cy:12.2f} {t_py / t_cy:8.2f} {diff:13.1e}")


if __name__ == "__main__":
    main()
