"""cancel-kit: structure checks and Hardy-type experiments from the command line.

Exit codes: 0 ok, 1 usage or input error, 2 undecided certificate,
3 regression breach or unusable threshold file.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .operator import HomOperator, OperatorSpecError
from .suite import (
    EXIT_OK,
    EXIT_REGRESSION,
    EXIT_UNDECIDED,
    EXIT_USAGE,
    FILTERS,
    RunConfig,
    dumps,
    hardy_series,
    run_blowup,
    run_check,
    run_green_test,
    run_oscillation,
    run_suite,
    run_synthesis,
    series_report,
    undecided,
    write_atomic,
)
from .thresholds import ThresholdError, load_thresholds


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _vector(text: str) -> list[Fraction]:
    try:
        return [Fraction(part.strip()) for part in text.split(",")]
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a comma-separated rational vector: {text!r}") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--grid", type=int, default=None, help="grid points per axis (power of two)")
    common.add_argument("--box", type=float, default=None, help="box half-width")
    common.add_argument("--out", type=Path, default=None, help="directory for JSON/CSV artifacts")
    common.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    common.add_argument("--thresholds", type=Path, default=None, help="threshold file (default: packaged)")

    parser = _Parser(prog="cancel-kit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", parents=[common], help="ellipticity and cancellation certificates")
    p.add_argument("operator", type=Path)
    p.add_argument("--sphere-mesh", type=float, default=0.05, help="covering radius of the ellipticity sphere grid")

    p = sub.add_parser("synthesize", parents=[common], help="potential, annihilator and recovery maps")
    p.add_argument("operator", type=Path)
    p.add_argument("--what", choices=("all", "potential", "annihilator", "recovery"), default="all")

    p = sub.add_parser("green-test", parents=[common], help="reconstruction of D^(k-l) u from A(D) u")
    p.add_argument("operator", type=Path)
    p.add_argument("--ell", type=int, default=None)
    p.add_argument("--no-pointwise", action="store_true", help="skip pointwise kernel checks")

    p = sub.add_parser("hardy", parents=[common], help="Hardy quotients of a dilated random bump")
    p.add_argument("operator", type=Path)
    p.add_argument("--ell", type=int, default=None)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--lambdas", type=_floats, default=(0.5, 0.7, 0.85, 1.0))

    p = sub.add_parser("blowup", parents=[common], help="necessity family for non-canceling operators")
    p.add_argument("operator", type=Path)
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--e", type=_vector, default=None, help="direction in the common range")
    p.add_argument("--lambdas", type=_floats, default=(1.0, 2.0, 4.0, 8.0))

    p = sub.add_parser("oscillate", parents=[common], help="necessity family for non-elliptic operators")
    p.add_argument("operator", type=Path)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--q", type=float, default=1.5)
    p.add_argument("--xi", type=_vector, default=None)
    p.add_argument("--v", type=_vector, default=None)
    p.add_argument("--lambdas", type=_floats, default=(1.0, 2.0, 4.0, 8.0))

    p = sub.add_parser("suite", parents=[common], help="run the whole catalog")
    p.add_argument("--filter", default="all", help=f"one of {', '.join(FILTERS)} or comma-separated names")
    p.add_argument("--catalog", type=Path, default=None, help="catalog directory (default: packaged)")
    p.add_argument("--jobs", type=int, default=1)
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        seed=args.seed,
        grid=args.grid,
        box=args.box,
        lambdas=getattr(args, "lambdas", None),
        out=args.out,
        fmt=args.fmt,
        filter=getattr(args, "filter", "all"),
        thresholds_path=args.thresholds,
        catalog_dir=getattr(args, "catalog", None),
        jobs=getattr(args, "jobs", 1),
    )


def _emit(name: str, report: dict, config: RunConfig, csv_text: str | None = None) -> None:
    text = dumps(report)
    if config.out is not None:
        write_atomic(Path(config.out) / f"{name}.json", text)
        if csv_text is not None:
            write_atomic(Path(config.out) / f"{name}.csv", csv_text)
    if config.fmt == "csv" and csv_text is not None:
        sys.stdout.write(csv_text)
    else:
        sys.stdout.write(text)


def _check_csv(report: dict) -> str:
    lines = ["property,verdict"]
    for key in ("elliptic", "canceling", "cocanceling"):
        lines.append(f"{key},{report[key].verdict.value}")
    return "\n".join(lines) + "\n"


def cmd_check(args, config) -> int:
    if not args.sphere_mesh > 0:
        raise UsageError("--sphere-mesh must be positive")
    report = run_check(args.operator, config, mesh=args.sphere_mesh)
    _emit(f"{args.operator.stem}_check", report, config, _check_csv(report))
    return EXIT_UNDECIDED if undecided(report) else EXIT_OK


def cmd_synthesize(args, config) -> int:
    A = HomOperator.load(args.operator)
    _emit(f"{args.operator.stem}_synthesis", run_synthesis(A, config, args.what), config)
    return EXIT_OK


def cmd_green_test(args, config) -> int:
    A = HomOperator.load(args.operator)
    thresholds = load_thresholds(config.thresholds_path)
    ell = args.ell if args.ell is not None else min(A.k, A.n - 1)
    report = run_green_test(A, ell, config, pointwise=not args.no_pointwise)
    ok = report["band_limited"]["relative_l2_error"] <= thresholds.tolerance("multiplier_consistency")
    if "kernel" in report:
        ok &= report["kernel"]["homogeneity_residual"] <= thresholds.tolerance("homogeneity_residual")
        ok &= report["kernel"]["principal_angle"] <= thresholds.tolerance("kernel_angle")
    report["passed"] = bool(ok)
    _emit(f"{args.operator.stem}_green", report, config)
    return EXIT_OK if ok else EXIT_REGRESSION


def cmd_hardy(args, config) -> int:
    A = HomOperator.load(args.operator)
    thresholds = load_thresholds(config.thresholds_path)
    ell = args.ell if args.ell is not None else min(A.k, A.n - 1)
    series = hardy_series(A, ell, args.q, config.lambdas, config)
    report = {"series": series_report(series), "summary": series.summary()}
    code = EXIT_OK
    name = args.operator.stem
    if args.q == 1.0 and ell == min(A.k, A.n - 1) and name in thresholds.sufficiency:
        constant = thresholds.sufficiency[name]
        ok = float(series.quotients.max()) <= constant
        report["frozen"] = {"constant": constant, "passed": ok}
        code = EXIT_OK if ok else EXIT_REGRESSION
    _emit(f"{name}_hardy", report, config, series.to_csv())
    return code


def cmd_blowup(args, config) -> int:
    A = HomOperator.load(args.operator)
    thresholds = load_thresholds(config.thresholds_path)
    exp = {"ell": args.ell, "q": args.q, "lambdas": list(config.lambdas), "n_grid": 256, "spacing_over_pi": 0.125}
    if args.e is not None:
        exp["e"] = args.e
    report, series = run_blowup(A, exp, config, thresholds.blowup_min_ratio)
    report["summary"] = series.summary()
    _emit(f"{args.operator.stem}_blowup", report, config, series.to_csv())
    return EXIT_OK if report["passed"] else EXIT_REGRESSION


def cmd_oscillate(args, config) -> int:
    A = HomOperator.load(args.operator)
    thresholds = load_thresholds(config.thresholds_path)
    exp = {"p": args.p, "q": args.q, "lambdas": list(config.lambdas), "n_grid": 128, "box": 10.0}
    if (args.xi is None) != (args.v is None):
        raise UsageError("--xi and --v must be given together")
    if args.xi is not None:
        exp["xi"], exp["v"] = args.xi, args.v
    if args.q > args.p:
        report, series, _ = run_oscillation(A, exp, config, thresholds.oscillation_min_ratio, None)
    else:
        report, series, _ = run_oscillation(A, exp, config, None, None)
        top = float(series.quotients.max())
        report["passed"] = top <= thresholds.control_max_quotient
        report["cap"] = thresholds.control_max_quotient
    report["summary"] = series.summary()
    _emit(f"{args.operator.stem}_oscillation", report, config, series.to_csv())
    return EXIT_OK if report["passed"] else EXIT_REGRESSION


def cmd_suite(args, config) -> int:
    code, summary = run_suite(config)
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return code


COMMANDS = {
    "check": cmd_check,
    "synthesize": cmd_synthesize,
    "green-test": cmd_green_test,
    "hardy": cmd_hardy,
    "blowup": cmd_blowup,
    "oscillate": cmd_oscillate,
    "suite": cmd_suite,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config(args)
        return COMMANDS[args.command](args, config)
    except ThresholdError as exc:
        print(f"cancel-kit: threshold file: {exc}", file=sys.stderr)
        return EXIT_REGRESSION
    except OperatorSpecError as exc:
        print(f"cancel-kit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"cancel-kit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ValueError) as exc:
        print(f"cancel-kit: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
