"""Regenerate the operator catalog shipped in src/cancelkit/catalog.

Run from the repository root: python scripts/make_catalog.py
"""

from __future__ import annotations

import itertools
import json
from fractions import Fraction
from pathlib import Path

from cancelkit.exact import ExactMatrix
from cancelkit.operator import HomOperator

OUT = Path(__file__).resolve().parents[1] / "src" / "cancelkit" / "catalog"


def unit(n: int, i: int) -> tuple[int, ...]:
    return tuple(int(j == i) for j in range(n))


def first_order(n: int, dim_v: int, rows: list[dict[int, dict[int, Fraction]]]) -> HomOperator:
    """rows[r][axis][component] = coefficient of d_axis u_component in output r."""
    terms = {}
    for axis in range(n):
        mat = [[Fraction(0)] * dim_v for _ in rows]
        for r, row in enumerate(rows):
            for comp, c in row.get(axis, {}).items():
                mat[r][comp] += c
        terms[unit(n, axis)] = ExactMatrix(mat, cols=dim_v)
    return HomOperator(n, 1, dim_v, len(rows), terms)


def gradient(n: int) -> HomOperator:
    return first_order(n, 1, [{i: {0: Fraction(1)}} for i in range(n)])


def hodge_two_forms_r4() -> HomOperator:
    """(d, d^*) on 2-forms of R^4: 6 components in, 4 + 4 out."""
    n = 4
    pairs = list(itertools.combinations(range(n), 2))
    index = {p: i for i, p in enumerate(pairs)}
    rows: list[dict[int, dict[int, Fraction]]] = []
    for i, j, k in itertools.combinations(range(n), 3):
        # (du)_{ijk} = d_i u_jk - d_j u_ik + d_k u_ij
        rows.append(
            {
                i: {index[(j, k)]: Fraction(1)},
                j: {index[(i, k)]: Fraction(-1)},
                k: {index[(i, j)]: Fraction(1)},
            }
        )
    for j in range(n):
        # (d^* u)_j = -sum_i d_i u_ij with u_ij = -u_ji
        row: dict[int, dict[int, Fraction]] = {}
        for i in range(n):
            if i == j:
                continue
            sign = Fraction(-1) if i < j else Fraction(1)
            row.setdefault(i, {})[index[tuple(sorted((i, j)))]] = sign
        rows.append(row)
    return first_order(n, 6, rows)


def build() -> dict[str, HomOperator]:
    ops = {}
    ops["gradient_r2"] = gradient(2)
    ops["derivative_r1"] = HomOperator.from_lists(1, 1, 1, 1, {(1,): [[1]]})
    ops["laplacian_r2"] = HomOperator.from_lists(2, 2, 1, 1, {(2, 0): [[1]], (0, 2): [[1]]})
    ops["mazya_r2"] = HomOperator.from_lists(
        2,
        2,
        2,
        4,
        {
            (2, 0): [[1, 0], [0, 1], [1, 0], [0, 0]],
            (1, 1): [[0, 0], [0, 0], [0, 1], [1, 0]],
            (0, 2): [[1, 0], [0, 1], [0, 0], [0, 1]],
        },
    )
    half = Fraction(1, 2)
    ops["symgrad_r2"] = first_order(
        2,
        2,
        [{0: {0: Fraction(1)}}, {0: {1: half}, 1: {0: half}}, {1: {1: Fraction(1)}}],
    )
    ops["hodge_r4"] = hodge_two_forms_r4()
    ops["d1d2_r3"] = first_order(3, 1, [{0: {0: Fraction(1)}}, {1: {0: Fraction(1)}}])
    ops["block_r4"] = first_order(
        4,
        2,
        [
            {0: {0: Fraction(1)}},
            {1: {1: Fraction(1)}},
            {2: {0: Fraction(1)}, 3: {1: Fraction(-1)}},
            {3: {0: Fraction(1)}, 2: {1: Fraction(1)}},
        ],
    )
    return ops


def projection(n: int, coords: list[int]) -> list[list[str]]:
    return [[str(int(i == j and i in coords)) for j in range(n)] for i in range(n)]


INDEX = {
    "version": 1,
    "entries": [
        {
            "name": "gradient_r2",
            "expected": {"elliptic": True, "canceling": True, "notes": "gradient on R^2"},
            "experiment": {"kind": "sufficiency", "n_grid": 128, "box": 8.0},
        },
        {
            "name": "derivative_r1",
            "expected": {"elliptic": True, "canceling": False, "notes": "d/dx on R; no admissible ell since ell <= n - 1 = 0"},
            "experiment": {"kind": "none"},
        },
        {
            "name": "laplacian_r2",
            "expected": {"elliptic": True, "canceling": False, "notes": "scalar Laplacian on R^2"},
            "experiment": {"kind": "blowup", "ell": 1, "q": 1.0, "e": ["1"], "lambdas": [1, 2, 4, 8], "n_grid": 256, "spacing_over_pi": 0.125},
        },
        {
            "name": "mazya_r2",
            "expected": {"elliptic": True, "canceling": True, "notes": "(Laplacian u, grad div u) on R^2"},
            "experiment": {"kind": "sufficiency", "n_grid": 128, "box": 8.0},
        },
        {
            "name": "symgrad_r2",
            "expected": {"elliptic": True, "canceling": True, "notes": "symmetric gradient on R^2"},
            "experiment": {"kind": "sufficiency", "n_grid": 128, "box": 8.0},
        },
        {
            "name": "hodge_r4",
            "expected": {"elliptic": True, "canceling": True, "notes": "(d, d*) on 2-forms of R^4, reduced grid"},
            "experiment": {"kind": "sufficiency", "n_grid": 32, "box": 8.0},
        },
        {
            "name": "d1d2_r3",
            "expected": {"elliptic": False, "canceling": True, "notes": "(d1, d2) on R^3"},
            "experiment": {
                "kind": "oscillation",
                "xi": ["0", "0", "1"],
                "v": ["1"],
                "p": 1.0,
                "q": 1.5,
                "control_q": 1.0,
                "lambdas": [1, 2, 4, 8],
                "n_grid": 128,
                "box": 10.0,
            },
        },
        {
            "name": "block_r4",
            "expected": {"elliptic": False, "canceling": True, "direct_sum": True, "notes": "4x2 block operator on R^4"},
            "experiment": {"kind": "sufficiency", "n_grid": 32, "box": 8.0},
            "decomposition": {
                "n": 4,
                "dimV": 2,
                "blocks": [
                    {
                        "P": projection(4, [0]),
                        "Q": projection(2, [0]),
                        "operator": HomOperator.from_lists(1, 1, 1, 1, {(1,): [[1]]}).to_dict(),
                    },
                    {
                        "P": projection(4, [1]),
                        "Q": projection(2, [1]),
                        "operator": HomOperator.from_lists(1, 1, 1, 1, {(1,): [[1]]}).to_dict(),
                    },
                    {
                        "P": projection(4, [2, 3]),
                        "Q": projection(2, [0, 1]),
                        "operator": HomOperator.from_lists(
                            2, 1, 2, 2, {(1, 0): [[1, 0], [0, 1]], (0, 1): [[0, -1], [1, 0]]}
                        ).to_dict(),
                    },
                ],
            },
        },
    ],
}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, op in build().items():
        (OUT / f"{name}.json").write_text(op.to_json() + "\n")
    for entry in INDEX["entries"]:
        entry["file"] = f"{entry['name']}.json"
    (OUT / "index.json").write_text(json.dumps(INDEX, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
