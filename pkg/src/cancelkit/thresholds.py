"""Versioned numeric thresholds for the regression suite, read from one JSON file."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

DEFAULT_PATH = Path(__file__).resolve().parent / "config" / "thresholds.json"
SCHEMA_VERSION = 1


class ThresholdError(ValueError):
    """The threshold file is missing, malformed or inconsistent."""


@dataclass(frozen=True)
class Thresholds:
    version: int
    sufficiency: Mapping[str, float]
    blowup_min_ratio: float
    oscillation_min_ratio: float
    control_max_quotient: float
    tolerances: Mapping[str, float]
    raw: Mapping[str, Any]

    def sufficiency_constant(self, name: str) -> float:
        try:
            return self.sufficiency[name]
        except KeyError:
            raise ThresholdError(f"no frozen sufficiency constant for {name!r}") from None

    def tolerance(self, key: str) -> float:
        try:
            return self.tolerances[key]
        except KeyError:
            raise ThresholdError(f"no tolerance named {key!r}") from None


def _positive(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ThresholdError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value) or value <= 0:
        raise ThresholdError(f"{where}: expected a positive finite number, got {value!r}")
    return float(value)


def parse_thresholds(doc: Mapping[str, Any]) -> Thresholds:
    if not isinstance(doc, Mapping):
        raise ThresholdError("top level must be an object")
    if doc.get("version") != SCHEMA_VERSION:
        raise ThresholdError(f"unsupported threshold version {doc.get('version')!r}")
    try:
        suff = {
            name: _positive(item["constant"], f"sufficiency.{name}.constant")
            for name, item in doc["sufficiency"].items()
        }
        blow = _positive(doc["blowup"]["min_ratio"], "blowup.min_ratio")
        osc = _positive(doc["oscillation"]["min_ratio"], "oscillation.min_ratio")
        ctrl = _positive(doc["control"]["max_quotient"], "control.max_quotient")
        tol = {key: _positive(v, f"tolerances.{key}") for key, v in doc["tolerances"].items()}
    except (KeyError, TypeError, AttributeError) as exc:
        raise ThresholdError(f"missing or malformed entry: {exc}") from exc
    if blow <= 1 or osc <= 1:
        raise ThresholdError("growth ratios must exceed 1")
    return Thresholds(SCHEMA_VERSION, suff, blow, osc, ctrl, tol, doc)


def load_thresholds(path: Path | str | None = None) -> Thresholds:
    path = Path(path) if path is not None else DEFAULT_PATH
    try:
        text = path.read_text()
    except OSError as exc:
        raise ThresholdError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ThresholdError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
    return parse_thresholds(doc)
