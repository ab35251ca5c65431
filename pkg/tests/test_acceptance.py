"""The nine acceptance criteria at their stated tolerances and runtime budgets."""

import math
import random
import time

import numpy as np

from cancelkit.exact import ExactMatrix
from cancelkit.green import apply_green
from cancelkit.grid import Grid, GridField, apply_operator, derivative_tensor
from cancelkit.inequality import (
    jset_constant,
    jset_constant_check,
    jset_constant_exact,
    linfty_check,
    random_bump_field,
)
from cancelkit.operator import HomOperator, compose_symbols
from cancelkit.structure import (
    DirectSumSpec,
    RankOneFamily,
    Verdict,
    canceling_space,
    direct_sum_condition,
    generic_rank,
    is_cocanceling,
    is_elliptic,
    rank_one_condition,
    symbol_rank,
)
from cancelkit.suite import (
    RunConfig,
    band_limited_field,
    gaussian_field,
    homogeneity_residual,
    kernel_angle,
    relative_l2,
    run_blowup,
    run_oscillation,
    run_sufficiency,
    sample_points,
)
from cancelkit.synthesis import apply_adjoint, build_annihilator, build_correction, build_recovery, potential_details
from cancelkit.thresholds import load_thresholds

from oracles import brute_rank_one, random_operator

THRESHOLDS = load_thresholds()
# a seed the frozen constants were not calibrated on
FRESH_SEED = 2026


def gradient(n):
    terms = {tuple(int(i == j) for j in range(n)): ExactMatrix([[int(r == i)] for r in range(n)]) for i in range(n)}
    return HomOperator(n, 1, 1, n, terms)


def _verdict(flag: bool) -> Verdict:
    return Verdict.HOLDS if flag else Verdict.FAILS


def test_criterion_1_classification(catalog, acceptance_line):
    t0 = time.perf_counter()
    mismatches = []
    for name, entry in catalog.items():
        ell = is_elliptic(entry.operator)
        _, can = canceling_space(entry.operator)
        exp = entry.expected
        if ell.verdict is not _verdict(exp.elliptic) or can.verdict is not _verdict(exp.canceling):
            mismatches.append(f"{name}: {ell.verdict.value}/{can.verdict.value}")
        if exp.direct_sum is not None:
            ds = direct_sum_condition(entry.decomposition).verdict
            if ds is not _verdict(exp.direct_sum):
                mismatches.append(f"{name}: direct sum {ds.value}")
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed < 10 and len(catalog) == 8
    acceptance_line(1, "classification", ok, elapsed, f"{len(catalog)} operators, mismatches {mismatches or 'none'}")
    assert not mismatches
    assert elapsed < 10


def test_criterion_2_exact_algebra(catalog, acceptance_line):
    t0 = time.perf_counter()
    rng = random.Random(20)
    potentials = 0
    for trial in range(50):
        n, k, dv = rng.randint(1, 3), rng.randint(1, 3), rng.randint(1, 3)
        A = random_operator(rng, n, k, dv, rng.randint(1, 3), density=0.4)
        pot = potential_details(A, seed=trial)
        assert compose_symbols(A, pot.B).is_zero()
        assert pot.generic_rank == generic_rank(A, random.Random(trial))
        if pot.base_point:
            assert symbol_rank(pot.B, pot.base_point) == A.dim_v - pot.generic_rank
        potentials += 1
    annihilated = 0
    for name, entry in catalog.items():
        if not entry.expected.canceling:
            continue
        A = entry.operator
        L, m = build_annihilator(A, elliptic_and_canceling=entry.expected.elliptic)
        assert compose_symbols(L, A).is_zero() and is_cocanceling(L).holds
        assert m <= 2 * A.k * A.dim_v
        rec = build_recovery(L)
        assert rec.identity_residual().is_zero()
        P = build_correction(rec, L)
        assert apply_adjoint(L, P) == {(0,) * L.n: ExactMatrix.identity(L.dim_v)}
        annihilated += 1
    assert annihilated == 6
    elapsed = time.perf_counter() - t0
    acceptance_line(
        2, "exact algebra", elapsed < 60, elapsed, f"{potentials} potentials, {annihilated} annihilators with K and P"
    )
    assert elapsed < 60


def test_criterion_3_green_reproduction(acceptance_line):
    t0 = time.perf_counter()
    A = gradient(2)
    grid = Grid(2, 128, 8.0)
    u = gaussian_field(grid, 1)
    gauss = relative_l2(apply_green(A, 1, apply_operator(A, u), anchor_boundary=True), u)
    ub = band_limited_field(grid, 1, np.random.default_rng(0))
    band = relative_l2(apply_green(A, 1, apply_operator(A, ub)), derivative_tensor(ub, 0))
    pts = sample_points(2, np.random.default_rng(1), 20)
    homog = homogeneity_residual(A, 1, pts[:5])
    angle, _, _ = kernel_angle(A, 1, pts)
    elapsed = time.perf_counter() - t0
    ok = gauss <= 0.05 and band <= 1e-6 and homog <= 0.01 and angle <= 1e-6 and elapsed < 30
    acceptance_line(
        3,
        "green reproduction",
        ok,
        elapsed,
        f"gaussian {gauss:.2e}, band-limited {band:.2e}, homogeneity {homog:.2e}, angle {angle:.1e}",
    )
    assert gauss <= 0.05
    assert band <= 1e-6
    assert homog <= 0.01
    assert angle <= 1e-6
    assert elapsed < 30


def test_criterion_4_sufficiency(catalog, acceptance_line):
    t0 = time.perf_counter()
    config = RunConfig(seed=FRESH_SEED)
    cases = [(n, e.operator, e.experiment) for n, e in catalog.items() if e.expected.elliptic and e.expected.canceling]
    assert sorted(n for n, _, _ in cases) == ["gradient_r2", "hodge_r4", "mazya_r2", "symgrad_r2"]
    cases.append(("gradient_r3", gradient(3), {"kind": "sufficiency", "n_grid": 128, "box": 8.0}))
    worst = {}
    for name, A, exp in cases:
        res = run_sufficiency(A, exp, config, THRESHOLDS.sufficiency_constant(name))
        worst[name] = (res["max_quotient"], res["constant"], res["passed"])
    elapsed = time.perf_counter() - t0
    ok = all(p for _, _, p in worst.values()) and elapsed < 120
    detail = ", ".join(f"{k} {q:.3f}<={c}" for k, (q, c, _) in worst.items())
    acceptance_line(4, "hardy sufficiency", ok, elapsed, detail)
    assert all(p for _, _, p in worst.values()), worst
    assert elapsed < 120


def test_criterion_5_necessity(catalog, acceptance_line):
    t0 = time.perf_counter()
    config = RunConfig()
    lap = catalog["laplacian_r2"]
    assert lap.experiment["n_grid"] == 256 and lap.experiment["lambdas"] == [1, 2, 4, 8]
    blow, _ = run_blowup(lap.operator, lap.experiment, config, THRESHOLDS.blowup_min_ratio)
    d = catalog["d1d2_r3"]
    exp = dict(d.experiment, p=1, q=1.5)
    exp.pop("control_q", None)
    osc, _, _ = run_oscillation(d.operator, exp, config, THRESHOLDS.oscillation_min_ratio, None)
    elapsed = time.perf_counter() - t0
    ok = blow["passed"] and osc["passed"] and elapsed < 180
    acceptance_line(
        5,
        "necessity growth",
        ok,
        elapsed,
        f"blow-up min ratio {blow['min_ratio']:.3f}>={THRESHOLDS.blowup_min_ratio}, "
        f"oscillation min ratio {osc['min_ratio']:.3f}>={THRESHOLDS.oscillation_min_ratio}",
    )
    assert blow["series"]["strictly_increasing"] and blow["passed"]
    assert osc["series"]["strictly_increasing"] and osc["passed"]
    assert elapsed < 180


def test_criterion_6_pure_hardy_control(catalog, acceptance_line):
    t0 = time.perf_counter()
    d = catalog["d1d2_r3"]
    exp = dict(d.experiment, p=1, q=1)
    exp.pop("control_q", None)
    out, series, _ = run_oscillation(d.operator, exp, RunConfig(), None, None)
    top = float(series.quotients.max())
    cap = THRESHOLDS.control_max_quotient
    elapsed = time.perf_counter() - t0
    ok = top <= cap
    ratios = ", ".join(f"{r:.3f}" for r in series.ratios())
    acceptance_line(6, "pure-hardy control", ok, elapsed, f"max quotient {top:.3f}<={cap}, ratios {ratios}")
    assert top <= cap


def test_criterion_7_decider_equivalence(acceptance_line):
    t0 = time.perf_counter()
    rng = random.Random(77)
    agree = 0
    for trial in range(50):
        n, dv, count = rng.randint(1, 3), rng.randint(1, 3), rng.randint(1, 5)
        a, b = [], []
        for _ in range(count):
            a.append([rng.randint(-2, 2) for _ in range(dv)])
            b.append([rng.randint(-2, 2) for _ in range(n)])
            if not any(a[-1]):
                a[-1][0] = 1
            if not any(b[-1]):
                b[-1][-1] = 1
        finite = rank_one_condition(RankOneFamily(a, b))
        assert finite.verdict is not Verdict.UNDECIDED
        assert finite.fails == brute_rank_one(a, b, samples=500, seed=trial), (a, b)
        assert direct_sum_condition(DirectSumSpec.rank_one(a, b)).verdict is finite.verdict
        agree += 1
    elapsed = time.perf_counter() - t0
    acceptance_line(7, "decider equivalence", agree == 50, elapsed, f"{agree}/50 families agree on both checks")


def test_criterion_8_jset(acceptance_line):
    t0 = time.perf_counter()
    pre, rad = jset_constant_exact([1, 0], [0, 1])
    assert (pre, rad) == (2, 1) and jset_constant([1, 0], [0, 1]) == 2.0
    rng = np.random.default_rng(8)
    grid = Grid(2, 64, 3.0)
    worst = -math.inf
    for trial in range(20):
        b = rng.normal(size=2)
        c = rng.uniform(-0.9, 0.9) * b + rng.normal() * np.array([-b[1], b[0]])
        f = GridField(grid, np.abs(random_bump_field(grid, 1, rng).values))
        res = jset_constant_check(b, c, f, samples=10**6, seed=trial, sigmas=THRESHOLDS.tolerance("jset_sigmas"))
        worst = max(worst, (res.lhs - res.rhs) / res.sigma)
    elapsed = time.perf_counter() - t0
    acceptance_line(
        8, "j-set bound", worst <= 3, elapsed, f"orthogonal constant {pre}*sqrt({rad}) = 2, worst (lhs-rhs)/sigma {worst:.1f}"
    )
    assert worst <= 3


def test_criterion_9_linfty(catalog, acceptance_line):
    t0 = time.perf_counter()
    A = catalog["laplacian_r2"].operator
    grid = Grid(2, 128, 8.0)
    rng = np.random.default_rng(9)
    slack = THRESHOLDS.tolerance("linfty_slack")
    worst = 0.0
    for _ in range(10):
        u = random_bump_field(grid, 1, rng, count=3, reach=0.5)
        res = linfty_check(A, u, 2, 2, slack=slack)
        worst = max(worst, res.lhs / (res.constant * res.rhs))
    elapsed = time.perf_counter() - t0
    acceptance_line(9, "L-infinity endpoint", worst <= 1 + slack, elapsed, f"worst lhs/(C' rhs) {worst:.3f}, slack {slack}")
    assert worst <= 1 + slack
