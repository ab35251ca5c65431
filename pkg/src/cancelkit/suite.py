"""Checks, experiments and report emission over single operators and the catalog."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import random
import tempfile
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .catalog import CatalogEntry, load_catalog
from .exact import ExactMatrix, Subspace, as_fraction, format_fraction
from .grid import Grid, GridField, apply_operator, derivative_tensor
from .green import MultiplierSpec, apply_green, eval_G_pointwise, kernel_intersection, principal_angle
from .inequality import (
    ExperimentSeries,
    HardyParams,
    SeriesRow,
    blowup_family,
    hardy_functional,
    l1_of_Au,
    oscillation_family,
    separable_bump,
    sufficiency_quotients,
)
from .operator import HomOperator, compose_symbols, eval_symbol
from .structure import (
    Certificate,
    Verdict,
    canceling_space,
    cokernel_space,
    direct_sum_condition,
    generic_rank,
    is_cocanceling,
    is_elliptic,
)
from .synthesis import build_annihilator, build_correction, build_recovery, potential_details
from .thresholds import Thresholds, load_thresholds

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNDECIDED = 2
EXIT_REGRESSION = 3

FILTERS = ("all", "elliptic-only", "non-elliptic", "canceling-only", "non-canceling")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    grid: int | None = None
    box: float | None = None
    lambdas: tuple[float, ...] | None = None
    out: Path | None = None
    fmt: str = "json"
    filter: str = "all"
    thresholds_path: Path | None = None
    catalog_dir: Path | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.grid is not None and (self.grid < 4 or self.grid & (self.grid - 1)):
            raise ValueError(f"grid size must be a power of two >= 4, got {self.grid}")
        if self.box is not None and not self.box > 0:
            raise ValueError("box half-width must be positive")
        if self.lambdas is not None and any(b <= a for a, b in zip(self.lambdas, self.lambdas[1:])):
            raise ValueError("lambda list must be strictly increasing")
        if self.fmt not in ("json", "csv"):
            raise ValueError("format must be json or csv")


# ---------------------------------------------------------------------------
# serialisation


def jsonable(obj: Any) -> Any:
    """Plain JSON data with exact rationals as strings and floats to 12 digits."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, Fraction):
        return format_fraction(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if not math.isfinite(x) else float(f"{x:.12g}")
    if isinstance(obj, Verdict):
        return obj.value
    if isinstance(obj, Subspace):
        return {"dim": obj.dim, "basis": [jsonable(v) for v in obj.vectors()]}
    if isinstance(obj, ExactMatrix):
        return obj.to_strings()
    if isinstance(obj, Certificate):
        return {
            "verdict": obj.verdict.value,
            "witness": jsonable(obj.witness),
            "margin": jsonable(obj.margin),
            "samples_used": obj.samples_used,
            "notes": jsonable(obj.notes),
        }
    if isinstance(obj, HomOperator):
        return obj.to_dict()
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, Mapping):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(report: Any) -> str:
    return json.dumps(jsonable(report), indent=2, sort_keys=True) + "\n"


def series_csv(series: ExperimentSeries) -> str:
    return series.to_csv()


def table_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# structure checks


def _operator_header(A: HomOperator, name: str) -> dict:
    return {"name": name, "n": A.n, "k": A.k, "dimV": A.dim_v, "dimE": A.dim_e}


def run_check(
    source: Path | str | HomOperator, config: RunConfig = RunConfig(), name: str | None = None, mesh: float = 0.05
) -> dict:
    """Ellipticity, cancellation and cocancellation certificates of one operator."""
    if isinstance(source, HomOperator):
        A, label = source, name or "operator"
    else:
        A, label = HomOperator.load(source), name or Path(source).stem
    space, cancel = canceling_space(A, seed=config.seed)
    return {
        "operator": _operator_header(A, label),
        "generic_rank": generic_rank(A, random.Random(config.seed)),
        "elliptic": is_elliptic(A, mesh=mesh),
        "canceling": cancel,
        "canceling_space": space,
        "cocanceling": is_cocanceling(A),
        "cokernel_space": cokernel_space(A),
    }


def undecided(report: Mapping) -> bool:
    return any(
        isinstance(v, Certificate) and v.verdict is Verdict.UNDECIDED for v in report.values()
    )


# ---------------------------------------------------------------------------
# synthesis


def run_synthesis(A: HomOperator, config: RunConfig = RunConfig(), what: str = "all") -> dict:
    """Constructed operators in the operator-spec format, with their verification flags."""
    if what not in ("all", "potential", "annihilator", "recovery"):
        raise ValueError(f"unknown synthesis target {what!r}")
    out: dict[str, Any] = {}
    if what in ("all", "potential"):
        pot = potential_details(A, seed=config.seed)
        out["potential"] = {
            "B": pot.B,
            "order": pot.B.k,
            "generic_rank": pot.generic_rank,
            "base_point": list(pot.base_point),
            "composition_zero": compose_symbols(A, pot.B).is_zero(),
        }
        if what == "potential":
            return out
    found = build_annihilator(A)
    if found is None:
        out["annihilator"] = None
        return out
    L, m = found
    K = build_recovery(L)
    P = build_correction(K, L)
    out["annihilator"] = {
        "L": L,
        "order": m,
        "dimF": L.dim_e,
        "cocanceling": is_cocanceling(L),
        "composition_zero": compose_symbols(L, A).is_zero(),
    }
    if what == "annihilator":
        return out
    out["recovery"] = {
        "maps": [{"alpha": list(a), "matrix": K.maps[a]} for a in sorted(K.maps, reverse=True)],
        "identity_residual_zero": K.identity_residual().is_zero(),
    }
    out["correction"] = {
        "coefficients": [{"alpha": list(a), "matrix": P.coeffs[a]} for a in sorted(P.coeffs, reverse=True)]
    }
    return out


# ---------------------------------------------------------------------------
# Green reconstruction


def gaussian_field(grid: Grid, dim: int) -> GridField:
    """exp(-|x|^2) times (1, 1/2, 1/3, ...)."""
    r2 = np.sum(grid.coords() ** 2, axis=0)
    weights = 1.0 / np.arange(1, dim + 1)
    return GridField(grid, weights.reshape((-1,) + (1,) * grid.n) * np.exp(-r2))


def relative_l2(a: GridField, b: GridField) -> float:
    return float(np.linalg.norm(a.values - b.values) / max(np.linalg.norm(b.values), 1e-300))


def band_limited_field(grid: Grid, dim: int, rng: np.random.Generator, cutoff: float = 0.5) -> GridField:
    """Random real field whose spectrum lives on 0 < |xi| < cutoff * Nyquist."""
    xi = grid.wavevectors()
    r = np.sqrt(np.sum(xi**2, axis=-1))
    keep = (r > 0) & (r < cutoff * math.pi / grid.h)
    spec = (rng.normal(size=(dim,) + grid.shape) + 1j * rng.normal(size=(dim,) + grid.shape)) * keep
    vals = np.fft.ifftn(spec, axes=tuple(range(1, grid.n + 1))).real
    # the real part of a masked spectrum stays inside the symmetric mask
    return GridField(grid, vals / np.abs(vals).max())


def homogeneity_residual(A: HomOperator, ell: int, points: Sequence[np.ndarray], factor: float = 1.7) -> float:
    worst = 0.0
    for x in points:
        g1 = eval_G_pointwise(A, ell, x).value
        g2 = eval_G_pointwise(A, ell, factor * np.asarray(x)).value
        expected = factor ** (ell - A.n) * g1
        worst = max(worst, float(np.abs(g2 - expected).max() / max(np.abs(g1).max(), 1e-300)))
    return worst


def kernel_angle(A: HomOperator, ell: int, points: Sequence[np.ndarray]) -> tuple[float, int, int]:
    """Angle between the common kernel of G at ``points`` and the cokernel space."""
    mats = [eval_G_pointwise(A, ell, x).value for x in points]
    U = kernel_intersection(mats, rel_tol=1e-6)
    cok = cokernel_space(A)
    W = np.array([[float(c) for c in v] for v in cok.vectors()]).T if cok.dim else np.zeros((A.dim_e, 0))
    return principal_angle(U, W), U.shape[1], cok.dim


def sample_points(n: int, rng: np.random.Generator, count: int) -> list[np.ndarray]:
    pts = []
    while len(pts) < count:
        x = rng.normal(size=n)
        if np.linalg.norm(x) > 0.2:
            pts.append(x / np.linalg.norm(x) * rng.uniform(0.5, 2.0))
    return pts


def run_green_test(A: HomOperator, ell: int, config: RunConfig = RunConfig(), pointwise: bool = True) -> dict:
    """Reconstruction errors for D^(k-l) u from A(D)u on a Gaussian and a band-limited field."""
    MultiplierSpec.for_operator(A, ell)
    N = config.grid or 128
    L = config.box or 8.0
    grid = Grid(A.n, N, L)
    rng = np.random.default_rng(config.seed)
    order = A.k - ell

    u = gaussian_field(grid, A.dim_v)
    f = apply_operator(A, u)
    target = derivative_tensor(u, order)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        raw = apply_green(A, ell, f)
        anchored = apply_green(A, ell, f, anchor_boundary=True)
    mean_free = GridField(grid, target.values - target.values.mean(axis=tuple(range(1, A.n + 1)), keepdims=True))
    report: dict[str, Any] = {
        "operator": _operator_header(A, "operator"),
        "ell": ell,
        "grid": {"N": N, "box": L},
        "gaussian": {
            "relative_l2_error": relative_l2(anchored, target),
            "relative_l2_error_raw": relative_l2(raw, target),
            "relative_l2_error_mean_free": relative_l2(raw, mean_free),
        },
    }
    band = band_limited_field(grid, A.dim_v, rng)
    back = apply_green(A, ell, apply_operator(A, band))
    report["band_limited"] = {"relative_l2_error": relative_l2(back, derivative_tensor(band, order))}
    if pointwise and A.n in (2, 3):
        pts = sample_points(A.n, rng, 4)
        angle, dim_u, dim_w = kernel_angle(A, ell, pts)
        report["kernel"] = {
            "homogeneity_residual": homogeneity_residual(A, ell, pts[:2]),
            "principal_angle": angle,
            "common_kernel_dim": dim_u,
            "cokernel_dim": dim_w,
        }
    return report


# ---------------------------------------------------------------------------
# experiments


def _grid_for(exp: Mapping, n: int, config: RunConfig) -> Grid:
    N = config.grid or int(exp.get("n_grid", 128))
    if config.box is not None:
        return Grid(n, N, config.box)
    if "spacing_over_pi" in exp:
        return Grid(n, N, 0.5 * N * math.pi * float(exp["spacing_over_pi"]))
    return Grid(n, N, float(exp.get("box", 8.0)))


def _lambdas(exp: Mapping, config: RunConfig) -> list[float]:
    return list(config.lambdas) if config.lambdas is not None else [float(x) for x in exp["lambdas"]]


def series_report(series: ExperimentSeries) -> dict:
    return {
        "label": series.label,
        "rows": [{"lambda": r.lam, "lhs": r.lhs, "rhs": r.rhs, "quotient": r.quotient} for r in series.rows],
        "ratios": list(series.ratios()),
        "strictly_increasing": series.strictly_increasing(),
    }


def growth_verdict(series: ExperimentSeries, bound: float | None) -> dict:
    ratios = series.ratios()
    min_ratio = float(np.min(ratios)) if len(ratios) else math.nan
    ok = bool(series.strictly_increasing() and (bound is None or min_ratio >= bound))
    return {"min_ratio": min_ratio, "bound": bound, "passed": ok}


def run_sufficiency(A: HomOperator, exp: Mapping, config: RunConfig, constant: float | None) -> dict:
    grid = _grid_for(exp, A.n, config)
    q = sufficiency_quotients(A, grid, seed=config.seed)
    worst = float(q.max())
    return {
        "kind": "sufficiency",
        "ell": min(A.k, A.n - 1),
        "q": 1.0,
        "grid": {"N": grid.N, "box": grid.L},
        "quotients": q,
        "max_quotient": worst,
        "constant": constant,
        "passed": constant is None or worst <= constant,
    }


def run_blowup(A: HomOperator, exp: Mapping, config: RunConfig, bound: float | None) -> tuple[dict, ExperimentSeries]:
    grid = _grid_for(exp, A.n, config)
    e = exp.get("e")
    if e is None:
        space, _ = canceling_space(A, seed=config.seed)
        e = space.vectors()[0]
    series = blowup_family(A, e, int(exp.get("ell", 1)), float(exp.get("q", 1.0)), _lambdas(exp, config), grid)
    out = {"kind": "blowup", "grid": {"N": grid.N, "box": grid.L}, "e": [as_fraction(c) for c in e]}
    out["series"] = series_report(series)
    out.update(growth_verdict(series, bound))
    return out, series


def oscillation_direction(A: HomOperator) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """(xi, v) with A(xi) v = 0 from the ellipticity witness."""
    cert = is_elliptic(A)
    if not cert.fails:
        raise ValueError(f"operator is not certified non-elliptic ({cert.verdict.value})")
    xi = tuple(cert.witness)
    ns = eval_symbol(A, xi).nullspace()
    return xi, tuple(ns.col(0))


def run_oscillation(
    A: HomOperator, exp: Mapping, config: RunConfig, bound: float | None, cap: float | None
) -> tuple[dict, ExperimentSeries, ExperimentSeries | None]:
    grid = _grid_for(exp, A.n, config)
    if "xi" in exp and "v" in exp:
        xi, v = exp["xi"], exp["v"]
    else:
        xi, v = oscillation_direction(A)
    lams = _lambdas(exp, config)
    p, q = float(exp.get("p", 1.0)), float(exp.get("q", 1.5))
    series = oscillation_family(A, xi, v, p, q, lams, grid)
    out: dict[str, Any] = {
        "kind": "oscillation",
        "grid": {"N": grid.N, "box": grid.L},
        "xi": [as_fraction(c) for c in xi],
        "v": [as_fraction(c) for c in v],
        "series": series_report(series),
    }
    out.update(growth_verdict(series, bound))
    control = None
    if "control_q" in exp:
        cq = float(exp["control_q"])
        control = oscillation_family(A, xi, v, cq, cq, lams, grid)
        top = float(control.quotients.max())
        ok = cap is None or top <= cap
        out["control"] = {"series": series_report(control), "max_quotient": top, "cap": cap, "passed": ok}
        out["passed"] = bool(out["passed"] and ok)
    return out, series, control


# ---------------------------------------------------------------------------
# catalog suite


def select_entries(entries: Sequence[CatalogEntry], which: str) -> list[CatalogEntry]:
    if which == "all":
        return list(entries)
    if which == "elliptic-only":
        return [e for e in entries if e.expected.elliptic]
    if which == "non-elliptic":
        return [e for e in entries if not e.expected.elliptic]
    if which == "canceling-only":
        return [e for e in entries if e.expected.canceling]
    if which == "non-canceling":
        return [e for e in entries if not e.expected.canceling]
    names = [s.strip() for s in which.split(",") if s.strip()]
    known = {e.name for e in entries}
    unknown = [n for n in names if n not in known]
    if unknown:
        raise ValueError(f"unknown filter or catalog names: {', '.join(unknown)}")
    return [e for e in entries if e.name in names]


def _expected_matches(entry: CatalogEntry, report: Mapping) -> dict:
    got_e = report["elliptic"].verdict
    got_c = report["canceling"].verdict
    exp = entry.expected
    checks = {
        "elliptic": got_e is (Verdict.HOLDS if exp.elliptic else Verdict.FAILS),
        "canceling": got_c is (Verdict.HOLDS if exp.canceling else Verdict.FAILS),
    }
    if exp.direct_sum is not None:
        got_d = report["direct_sum"].verdict
        checks["direct_sum"] = got_d is (Verdict.HOLDS if exp.direct_sum else Verdict.FAILS)
    return checks


def run_entry(entry: CatalogEntry, config: RunConfig, thresholds: Thresholds) -> tuple[dict, dict[str, str]]:
    """Report and CSV artifacts for one catalog entry."""
    report = run_check(entry.operator, config, name=entry.name)
    if entry.decomposition is not None:
        report["direct_sum"] = direct_sum_condition(entry.decomposition)
    report["expected"] = {
        "elliptic": entry.expected.elliptic,
        "canceling": entry.expected.canceling,
        "direct_sum": entry.expected.direct_sum,
        "notes": entry.expected.notes,
    }
    matches = _expected_matches(entry, report)
    report["expected_matches"] = matches
    csvs: dict[str, str] = {}
    kind = entry.experiment.get("kind", "none")
    A = entry.operator
    if kind == "sufficiency":
        exp = run_sufficiency(A, entry.experiment, config, thresholds.sufficiency_constant(entry.name))
        q = exp["quotients"]
        scalings = (0.5, 0.7, 0.85, 1.0)
        csvs[f"{entry.name}.csv"] = table_csv(
            ["bump", "scaling", "quotient"],
            [(b, scalings[s], q[b, s]) for b in range(q.shape[0]) for s in range(q.shape[1])],
        )
    elif kind == "blowup":
        exp, series = run_blowup(A, entry.experiment, config, thresholds.blowup_min_ratio)
        csvs[f"{entry.name}.csv"] = series.to_csv()
    elif kind == "oscillation":
        exp, series, control = run_oscillation(
            A, entry.experiment, config, thresholds.oscillation_min_ratio, thresholds.control_max_quotient
        )
        csvs[f"{entry.name}.csv"] = series.to_csv()
        if control is not None:
            csvs[f"{entry.name}_control.csv"] = control.to_csv()
    elif kind == "none":
        exp = {"kind": "none", "passed": True}
    else:
        raise ValueError(f"unknown experiment kind {kind!r} for {entry.name}")
    report["experiment"] = exp
    report["status"] = entry_status(report)
    return report, csvs


def entry_status(report: Mapping) -> str:
    if not all(report["expected_matches"].values()) or not report["experiment"].get("passed", True):
        return "regression"
    if undecided(report):
        return "undecided"
    return "ok"


def _run_named(args: tuple[str, RunConfig]) -> tuple[str, str, dict[str, str]]:
    name, config = args
    entries = {e.name: e for e in load_catalog(config.catalog_dir)}
    thresholds = load_thresholds(config.thresholds_path)
    report, csvs = run_entry(entries[name], config, thresholds)
    return report["status"], dumps(report), csvs


def run_suite(config: RunConfig = RunConfig()) -> tuple[int, dict]:
    """Run checks and experiments over the catalog; returns (exit code, summary).

    A corrupted threshold file raises ThresholdError before any work starts.
    """
    load_thresholds(config.thresholds_path)
    entries = select_entries(load_catalog(config.catalog_dir), config.filter)
    jobs = [(e.name, config) for e in entries]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_named, jobs))
    else:
        results = [_run_named(j) for j in jobs]
    statuses = {}
    for (name, _), (status, text, csvs) in zip(jobs, results):
        statuses[name] = status
        if config.out is not None:
            write_atomic(Path(config.out) / f"{name}.json", text)
            for fname, body in csvs.items():
                write_atomic(Path(config.out) / fname, body)
    if any(s == "regression" for s in statuses.values()):
        code = EXIT_REGRESSION
    elif any(s == "undecided" for s in statuses.values()):
        code = EXIT_UNDECIDED
    else:
        code = EXIT_OK
    summary = {"entries": statuses, "exit_code": code, "seed": config.seed, "filter": config.filter}
    if config.out is not None:
        write_atomic(Path(config.out) / "summary.json", dumps(summary))
    return code, summary


def hardy_series(A: HomOperator, ell: int, q: float, lambdas: Sequence[float], config: RunConfig) -> ExperimentSeries:
    """Hardy quotient of one seeded random bump under the dilations u(x / lambda)."""
    grid = Grid(A.n, config.grid or 128, config.box or 8.0)
    rng = np.random.default_rng(config.seed)
    specs = []
    for _ in range(2):
        width = rng.uniform(0.15, 0.3) * grid.L
        center = rng.uniform(-(0.6 * grid.L - width), 0.6 * grid.L - width, size=grid.n)
        specs.append((center, width, rng.normal(size=A.dim_v)))
    params = HardyParams(A.n, ell, q)
    rows = []
    for lam in lambdas:
        vals = np.zeros((A.dim_v,) + grid.shape)
        for center, width, direction in specs:
            vals += direction.reshape((-1,) + (1,) * grid.n) * separable_bump(grid.axis() / lam, grid.n, center, width)
        u = GridField(grid, vals)
        lhs = hardy_functional(derivative_tensor(u, A.k - ell), params)
        rhs = l1_of_Au(A, u)
        rows.append(SeriesRow(float(lam), lhs, rhs, lhs / rhs if rhs > 0 else math.nan))
    return ExperimentSeries(f"hardy:{ell}:{q}", tuple(rows))


__all__ = [
    "RunConfig",
    "run_check",
    "run_synthesis",
    "run_green_test",
    "run_sufficiency",
    "run_blowup",
    "run_oscillation",
    "run_entry",
    "run_suite",
    "hardy_series",
    "dumps",
]
