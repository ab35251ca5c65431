"""The shipped operator catalog: operator files plus an index of expected verdicts."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .exact import ExactMatrix
from .operator import HomOperator, OperatorSpecError
from .structure import Block, DirectSumSpec

CATALOG_DIR = Path(__file__).resolve().parent / "catalog"


@dataclass(frozen=True)
class Expected:
    elliptic: bool
    canceling: bool
    notes: str = ""
    direct_sum: bool | None = None


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    path: Path
    operator: HomOperator
    expected: Expected
    experiment: Mapping[str, Any] = field(default_factory=dict)
    decomposition: DirectSumSpec | None = None


def _matrix(rows) -> ExactMatrix:
    return ExactMatrix([[c for c in row] for row in rows], cols=len(rows[0]) if rows else 0)


def decomposition_from_dict(doc: Mapping) -> DirectSumSpec:
    blocks = []
    for i, blk in enumerate(doc["blocks"]):
        try:
            blocks.append(Block(_matrix(blk["P"]), _matrix(blk["Q"]), HomOperator.from_dict(blk["operator"])))
        except (KeyError, TypeError) as exc:
            raise OperatorSpecError(f"malformed block: {exc}", f"blocks[{i}]") from exc
    return DirectSumSpec(int(doc["n"]), int(doc["dimV"]), tuple(blocks))


def load_catalog(directory: Path | str | None = None) -> list[CatalogEntry]:
    """Entries of ``index.json`` in file order."""
    root = Path(directory) if directory is not None else CATALOG_DIR
    index_path = root / "index.json"
    if not index_path.is_file():
        raise FileNotFoundError(f"catalog index not found: {index_path}")
    index = json.loads(index_path.read_text())
    entries = []
    for item in index["entries"]:
        path = root / item["file"]
        if not path.is_file():
            raise FileNotFoundError(f"catalog file not found: {path}")
        exp = item["expected"]
        decomposition = item.get("decomposition")
        entries.append(
            CatalogEntry(
                name=item["name"],
                path=path,
                operator=HomOperator.load(path),
                expected=Expected(exp["elliptic"], exp["canceling"], exp.get("notes", ""), exp.get("direct_sum")),
                experiment=item.get("experiment", {"kind": "none"}),
                decomposition=decomposition_from_dict(decomposition) if decomposition else None,
            )
        )
    return entries


def get_entry(name: str, directory: Path | str | None = None) -> CatalogEntry:
    for entry in load_catalog(directory):
        if entry.name == name:
            return entry
    raise KeyError(f"no catalog entry named {name!r}")
