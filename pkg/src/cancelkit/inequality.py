"""Hardy-type functionals on grids and the test-function families that probe them."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from .exact import as_fraction
from .grid import Grid, GridField, apply_operator, derivative_tensor, forward, from_spectrum
from .green import apply_green
from .operator import HomOperator, eval_symbol
from .structure import RankOneFamily, canceling_space, rank_one_violation


class InequalityViolation(AssertionError):
    """A numerical check of an inequality that must hold came out false."""


# ---------------------------------------------------------------------------
# functionals


@dataclass(frozen=True)
class HardyParams:
    """Exponents of the weighted functional (int |v|^q |x|^-s)^(1/q).

    Without ``p`` the weight is s = n - (n - ell) q with 1 <= q < n/(n - ell).
    With ``p`` (the Hardy-Sobolev scale) it is s = n - (n/p - 1) q.
    """

    n: int
    ell: int
    q: float
    p: float | None = None

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be at least 1")
        if self.p is None:
            if not 1 <= self.ell <= self.n - 1:
                raise ValueError(f"ell must lie in 1..{self.n - 1}")
            if not self.q < self.n / (self.n - self.ell):
                raise ValueError(f"q must be below n/(n-ell) = {self.n / (self.n - self.ell):g}")
        else:
            if not 1 <= self.p < self.n:
                raise ValueError("p must lie in [1, n)")
            if self.q < self.p:
                raise ValueError("q must be at least p")
        if not 0 <= self.weight_exponent < self.n:
            raise ValueError(f"weight exponent {self.weight_exponent} must lie in [0, n)")

    @property
    def weight_exponent(self) -> float:
        if self.p is None:
            return self.n - (self.n - self.ell) * self.q
        return self.n - (self.n / self.p - 1.0) * self.q


def weighted_integral(v: GridField, exponent: float, q: float) -> float:
    """Midpoint rule for int |v|^q / |x|^exponent; the grid never contains 0."""
    g = v.grid
    total = kernels.weighted_power_sum(v.values.reshape(v.d, -1), g.n, g.N, g.L, exponent, q)
    return total * g.cell_volume


def hardy_functional(v: GridField, params: HardyParams) -> float:
    if v.n != params.n:
        raise ValueError("field dimension does not match the parameters")
    return weighted_integral(v, params.weight_exponent, params.q) ** (1.0 / params.q)


def _warn_boundary(u: GridField, tol: float = 1e-8) -> None:
    top = float(np.abs(u.values).max())
    if top > 0 and u.boundary_magnitude() > tol * top:
        warnings.warn("field does not vanish near the box boundary", RuntimeWarning, stacklevel=3)


def l1_of_Au(A: HomOperator, u: GridField, method: str = "spectral") -> float:
    """int |A(D)u| with the Euclidean norm on E."""
    _warn_boundary(u)
    return apply_operator(A, u, method).integral_abs()


def lp_of_Au(A: HomOperator, u: GridField, p: float, method: str = "spectral") -> float:
    _warn_boundary(u)
    f = apply_operator(A, u, method)
    return float(np.sum(f.pointwise_norm() ** p) * u.grid.cell_volume) ** (1.0 / p)


# ---------------------------------------------------------------------------
# series


@dataclass(frozen=True)
class SeriesRow:
    lam: float
    lhs: float
    rhs: float
    quotient: float


@dataclass(frozen=True)
class ExperimentSeries:
    label: str
    rows: tuple[SeriesRow, ...]

    def __post_init__(self):
        rows = tuple(self.rows)
        object.__setattr__(self, "rows", rows)
        lams = [r.lam for r in rows]
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise ValueError("lambda values must be strictly increasing")

    @property
    def quotients(self) -> np.ndarray:
        return np.array([r.quotient for r in self.rows])

    def ratios(self) -> np.ndarray:
        q = self.quotients
        return q[1:] / q[:-1]

    def strictly_increasing(self) -> bool:
        return bool(np.all(np.diff(self.quotients) > 0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "lhs", "rhs", "quotient"])
        for r in self.rows:
            w.writerow([f"{r.lam:.6g}", f"{r.lhs:.10e}", f"{r.rhs:.10e}", f"{r.quotient:.10e}"])
        return buf.getvalue()

    def summary(self) -> dict:
        ratios = self.ratios()
        return {
            "label": self.label,
            "strictly_increasing": self.strictly_increasing(),
            "min_ratio": float(ratios.min()) if ratios.size else None,
            "max_quotient": float(self.quotients.max()),
        }


def _row(lam: float, lhs: float, rhs: float) -> SeriesRow:
    if rhs <= 0:
        raise ValueError(f"right-hand side vanished at lambda={lam}")
    return SeriesRow(float(lam), float(lhs), float(rhs), float(lhs / rhs))


# ---------------------------------------------------------------------------
# profiles


def smoothstep(t: np.ndarray) -> np.ndarray:
    """Quintic step: 0 for t <= 0, 1 for t >= 1, C^2 in between."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def plateau_spectrum(xi: np.ndarray) -> np.ndarray:
    """1 on |xi| <= 1/4, 0 on |xi| >= 1/2, radial smoothstep in between."""
    r = np.sqrt(np.sum(np.asarray(xi) ** 2, axis=-1))
    return smoothstep((0.5 - r) * 4.0)


def bump_1d(t: np.ndarray) -> np.ndarray:
    """(1 - t^2)^6 on |t| < 1, zero outside."""
    t = np.asarray(t)
    return np.where(np.abs(t) < 1.0, (1.0 - np.minimum(t * t, 1.0)) ** 6, 0.0)


def separable_bump(axis: np.ndarray, n: int, center: Sequence[float], width: float | Sequence[float]) -> np.ndarray:
    """tensor_bump on the full grid built from one coordinate axis by outer products."""
    widths = np.broadcast_to(np.asarray(width, dtype=float), (n,))
    out = np.ones(())
    for i in range(n):
        out = np.multiply.outer(out, bump_1d((axis - center[i]) / widths[i]))
    return out


def tensor_bump(coords: np.ndarray, center: Sequence[float], width: float | Sequence[float]) -> np.ndarray:
    widths = np.broadcast_to(np.asarray(width, dtype=float), (coords.shape[0],))
    out = np.ones(coords.shape[1:])
    for i in range(coords.shape[0]):
        out = out * bump_1d((coords[i] - center[i]) / widths[i])
    return out


def radial_bump(coords: np.ndarray, radius: float) -> np.ndarray:
    r2 = np.sum(coords**2, axis=0) / radius**2
    return np.where(r2 < 1.0, (1.0 - np.minimum(r2, 1.0)) ** 6, 0.0)


def random_bump_field(grid: Grid, dim: int, rng: np.random.Generator, count: int = 2, reach: float = 0.6) -> GridField:
    """Sum of ``count`` tensor bumps with random centers, widths and V-directions.

    Supports stay within ``reach * L`` of the origin.
    """
    coords = grid.coords()
    vals = np.zeros((dim,) + grid.shape)
    L = grid.L
    for _ in range(count):
        width = rng.uniform(0.15, 0.3) * L
        center = rng.uniform(-(reach * L - width), reach * L - width, size=grid.n)
        direction = rng.normal(size=dim)
        vals += direction.reshape((-1,) + (1,) * grid.n) * tensor_bump(coords, center, width)
    return GridField(grid, vals)


def rescale(u: GridField, factor: float, build) -> GridField:
    """Resample ``build(coords / factor)``; used for scaling checks."""
    return GridField(u.grid, build(u.grid.coords() / factor))


# ---------------------------------------------------------------------------
# necessity of cancellation


def plateau_rate(xi: np.ndarray) -> np.ndarray:
    """-xi . grad of the plateau, the lam-derivative of rho_lam_hat at lam = 1 up to a factor 2."""
    r = np.sqrt(np.sum(np.asarray(xi) ** 2, axis=-1))
    t = np.clip((0.5 - r) * 4.0, 0.0, 1.0)
    return 4.0 * r * 30.0 * t * t * (1.0 - t) ** 2


def rho_spectrum(lam: float):
    """Transform of rho_lam = lam^n psi(lam x) - lam^-n psi(x/lam).

    The family vanishes at lam = 1. Both sides of every quotient built from
    it are linear in rho, so the quotient extends continuously to lam = 1
    and that limit is computed from d rho_lam / d lam there.
    """
    if lam == 1:
        return plateau_rate

    def spec(xi):
        return plateau_spectrum(xi / lam) - plateau_spectrum(xi * lam)

    return spec


def blowup_family(
    A: HomOperator,
    e: Sequence,
    ell: int,
    q: float,
    lambdas: Sequence[float],
    grid: Grid,
) -> ExperimentSeries:
    """Hardy quotients along u_lam with A(D)u_lam = rho_lam e.

    ``e`` must lie in the common range of A(xi) (so A is not canceling). The
    left side is the weighted norm of D^(k-l) u_lam = G * (rho_lam e), the
    right side int |rho_lam| |e|.
    """
    space, _ = canceling_space(A)
    e_exact = tuple(as_fraction(c) for c in e)
    if space.dim == 0:
        raise ValueError("operator is canceling: no admissible direction e")
    if not any(e_exact) or not space.contains(e_exact):
        raise ValueError("e must be a nonzero vector of the common range")
    e_vec = np.array([float(c) for c in e_exact])
    params = HardyParams(A.n, ell, q)
    rows = []
    for lam in lambdas:
        rho = from_spectrum(grid, rho_spectrum(lam))
        f = GridField(grid, e_vec.reshape((-1,) + (1,) * grid.n) * rho.values)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            deriv = apply_green(A, ell, f)
        lhs = hardy_functional(deriv, params)
        rhs = rho.integral_abs() * float(np.linalg.norm(e_vec))
        rows.append(_row(lam, lhs, rhs))
    return ExperimentSeries(f"blowup:{ell}:{q}", tuple(rows))


def psi_l1(grid: Grid) -> float:
    """int |psi| for the plateau profile, sampled on ``grid``."""
    return from_spectrum(grid, plateau_spectrum).integral_abs()


# ---------------------------------------------------------------------------
# necessity of ellipticity


def oscillation_field(grid: Grid, xi: np.ndarray, v: np.ndarray, lam: float, radius: float, width: float) -> GridField:
    """u_lam(x) = phi(x/lam) psi(xi . x) v with radial phi and one-dimensional psi."""
    c = grid.coords()
    phi = radial_bump(c / lam, radius)
    s = np.tensordot(xi, c, axes=(0, 0))
    profile = phi * bump_1d(s / width)
    return GridField(grid, v.reshape((-1,) + (1,) * grid.n) * profile)


def oscillation_family(
    A: HomOperator,
    xi: Sequence,
    v: Sequence,
    p: float,
    q: float,
    lambdas: Sequence[float],
    grid: Grid,
    radius: float = 1.0,
    width: float = 1.0,
) -> ExperimentSeries:
    """Hardy-Sobolev quotients along u_lam(x) = phi(x/lam) psi(xi . x) v.

    Requires A(xi) v = 0 exactly. The left side is
    (int |D^(k-1) u|^q / |x|^(n - (n/p - 1) q))^(1/q), the right side
    (int |A(D) u|^p)^(1/p).
    """
    xi_exact = [as_fraction(c) for c in xi]
    v_exact = [as_fraction(c) for c in v]
    if not any(xi_exact) or not any(v_exact):
        raise ValueError("xi and v must be nonzero")
    if any(eval_symbol(A, xi_exact).apply(v_exact)):
        raise ValueError("A(xi) v must vanish")
    xf = np.array([float(c) for c in xi_exact])
    xf /= np.linalg.norm(xf)
    vf = np.array([float(c) for c in v_exact])
    params = HardyParams(A.n, 1, q, p)
    rows = []
    for lam in lambdas:
        u = oscillation_field(grid, xf, vf, lam, radius, width)
        lhs = hardy_functional(derivative_tensor(u, A.k - 1), params)
        rhs = lp_of_Au(A, u, p)
        rows.append(_row(lam, lhs, rhs))
    return ExperimentSeries(f"oscillation:{p}:{q}", tuple(rows))


# ---------------------------------------------------------------------------
# sufficiency


def hardy_quotient(A: HomOperator, u: GridField, ell: int, q: float = 1.0) -> float:
    lhs = hardy_functional(derivative_tensor(u, A.k - ell), HardyParams(A.n, ell, q))
    return lhs / l1_of_Au(A, u)


def sufficiency_quotients(
    A: HomOperator,
    grid: Grid,
    seed: int,
    bumps: int = 10,
    scalings: Sequence[float] = (0.5, 0.7, 0.85, 1.0),
) -> np.ndarray:
    """Hardy quotients (ell = min(k, n-1), q = 1) over random bumps and dilations.

    Returns an array of shape (bumps, len(scalings)).
    """
    ell = min(A.k, A.n - 1)
    rng = np.random.default_rng(seed)
    out = np.empty((bumps, len(scalings)))
    for b in range(bumps):
        specs = []
        for _ in range(2):
            width = rng.uniform(0.15, 0.3) * grid.L
            center = rng.uniform(-(0.6 * grid.L - width), 0.6 * grid.L - width, size=grid.n)
            specs.append((center, width, rng.normal(size=A.dim_v)))

        def build(axis, specs=specs):
            vals = np.zeros((A.dim_v,) + grid.shape)
            for center, width, direction in specs:
                vals += direction.reshape((-1,) + (1,) * grid.n) * separable_bump(axis, grid.n, center, width)
            return vals

        for s_i, s in enumerate(scalings):
            u = GridField(grid, build(grid.axis() / s))
            out[b, s_i] = hardy_quotient(A, u, ell)
    return out


# ---------------------------------------------------------------------------
# L^infinity endpoint


@dataclass(frozen=True)
class CheckResult:
    lhs: float
    rhs: float
    sigma: float = 0.0
    constant: float = 1.0

    def __iter__(self) -> Iterator[float]:
        return iter((self.lhs, self.rhs))


def sphere_area(n: int) -> float:
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def spectral_value_at(field: GridField, point: np.ndarray) -> np.ndarray:
    """Trigonometric interpolant of each component evaluated at ``point``."""
    g = field.grid
    spec = forward(field) * g.nyquist_mask()
    x0 = np.full(g.n, -g.L + 0.5 * g.h)
    phase = np.exp(1j * (g.wavevectors() @ (np.asarray(point, dtype=float) - x0)))
    return (np.sum(spec * phase, axis=tuple(range(1, g.n + 1))) / g.N**g.n).real


def linfty_check(A: HomOperator, u: GridField, k: int, n: int, center=None, slack: float = 0.05) -> CheckResult:
    """|D^(k-n) u(c)| against (1/|S^(n-1)|) int |D^(k-n+1) u(x)| / |x - c|^(n-1) dx.

    ``center`` must be a lattice point (a multiple of h per axis), so the
    weight is never evaluated at a node. Raises InequalityViolation when
    lhs > (1 + slack) rhs / |S^(n-1)|.
    """
    if k < n:
        raise ValueError("the endpoint estimate needs k >= n")
    if (A.k, A.n) != (k, n) or u.n != n:
        raise ValueError("operator, field and (k, n) disagree")
    g = u.grid
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    steps = c / g.h
    if not np.allclose(steps, np.round(steps), atol=1e-9):
        raise ValueError("center must be a multiple of the grid spacing")
    lhs = float(np.linalg.norm(spectral_value_at(derivative_tensor(u, k - n), c)))
    shift = tuple(int(s) for s in np.round(steps))
    # translate the derivative field so that the center sits at the origin
    d1 = derivative_tensor(u, k - n + 1)
    moved = GridField(g, np.roll(d1.values, tuple(-s for s in shift), axis=tuple(range(1, n + 1))))
    rhs = weighted_integral(moved, n - 1, 1.0)
    const = 1.0 / sphere_area(n)
    if lhs > (1.0 + slack) * const * rhs:
        raise InequalityViolation(f"lhs {lhs:.6g} exceeds {(1 + slack) * const:.6g} * {rhs:.6g}")
    return CheckResult(lhs, rhs, constant=const)


# ---------------------------------------------------------------------------
# J-set bound


def jset_constant(b: Sequence[float], c: Sequence[float]) -> float:
    """2 |b| sqrt(|b|^2 |c|^2 - (b.c)^2) / (|b|^4 - (b.c)^2)."""
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    bb, cc, bc = b @ b, c @ c, b @ c
    if not abs(bc) < bb:
        raise ValueError("need |b.c| < |b|^2")
    return 2.0 * math.sqrt(bb) * math.sqrt(max(bb * cc - bc * bc, 0.0)) / (bb * bb - bc * bc)


def jset_constant_exact(b: Sequence, c: Sequence) -> tuple[Fraction, Fraction]:
    """(rational prefactor, radicand): constant = prefactor * sqrt(radicand)."""
    b = [as_fraction(x) for x in b]
    c = [as_fraction(x) for x in c]
    bb = sum(x * x for x in b)
    cc = sum(x * x for x in c)
    bc = sum(x * y for x, y in zip(b, c))
    if not abs(bc) < bb:
        raise ValueError("need |b.c| < |b|^2")
    return Fraction(2) / (bb * bb - bc * bc), bb * (bb * cc - bc * bc)


def line_profile(f: GridField, b: np.ndarray, samples: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Phi(s) = int f(s b_perp + t b) dt on a uniform grid of offsets s.

    Phi(x . b_perp) equals the line integral of f through x in direction b.
    """
    g = f.grid
    if g.n != 2 or f.d != 1:
        raise ValueError("line profiles need a scalar field on a planar grid")
    bn = np.linalg.norm(b)
    unit = b / bn
    perp = np.array([-unit[1], unit[0]])
    reach = g.L * math.sqrt(2.0)
    count = samples or 4 * g.N
    s = np.linspace(-reach, reach, count)
    dtau = 0.25 * g.h
    steps = int(math.ceil(2 * reach / dtau)) + 1
    starts = s[:, None] * perp[None, :] - reach * unit[None, :]
    # t = tau / |b| turns the arc-length integral into the dt integral
    prof = kernels.line_integrals(f.values[0], g.L, starts, unit, dtau, steps) / bn
    return s, prof


def jset_constant_check(
    b: Sequence[float],
    c: Sequence[float],
    f: GridField,
    samples: int = 10**6,
    seed: int = 0,
    sigmas: float = 3.0,
) -> CheckResult:
    """Monte Carlo for int_J int_R f(x + t b) dt dx / |x| against C(b, c) int f.

    J = {|b.x| <= |c.x|}. In polar coordinates the 1/|x| weight cancels the
    Jacobian, so r and theta are drawn uniformly. Raises InequalityViolation
    when the estimate exceeds the bound by more than ``sigmas`` standard
    errors.
    """
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    const = jset_constant(b, c)
    if np.any(f.values < 0):
        raise ValueError("f must be nonnegative")
    rhs = const * float(f.values.sum() * f.grid.cell_volume)
    if not np.any(f.values):
        return CheckResult(0.0, 0.0, 0.0, const)
    s_grid, prof = line_profile(f, b)
    unit = b / np.linalg.norm(b)
    perp = np.array([-unit[1], unit[0]])
    # smallest |sin(angle(theta, b))| on J is attained on its boundary |b.x| = |c.x|
    sines = []
    for w in (b - c, b + c):
        if np.linalg.norm(w) > 0:
            d = np.array([-w[1], w[0]]) / np.linalg.norm(w)
            sines.append(abs(d @ perp))
    reach = f.grid.L * math.sqrt(2.0)
    r_max = reach / min(sines) * 1.001
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.0, r_max, samples)
    th = rng.uniform(0.0, 2.0 * math.pi, samples)
    x = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
    inside = np.abs(x @ b) <= np.abs(x @ c)
    vals = np.where(inside, np.interp(x @ perp, s_grid, prof, left=0.0, right=0.0), 0.0)
    vol = 2.0 * math.pi * r_max
    est = vol * vals
    lhs = float(est.mean())
    sigma = float(est.std(ddof=1) / math.sqrt(samples))
    if lhs - sigmas * sigma > rhs:
        raise InequalityViolation(f"J-set estimate {lhs:.6g} +- {sigma:.2g} exceeds bound {rhs:.6g}")
    return CheckResult(lhs, rhs, sigma, const)


# ---------------------------------------------------------------------------
# rank-one families


def rank_one_rhs(fam: RankOneFamily, u: GridField) -> float:
    """sum_i int |a_i . D u [b_i]|."""
    f = apply_operator(fam.operator(), u)
    return float(np.sum(np.abs(f.values)) * u.grid.cell_volume)


def rank_one_quotients(fam: RankOneFamily, grid: Grid, seed: int, bumps: int = 10) -> np.ndarray:
    """int |u| / |x| over sum_i int |a_i . Du[b_i]| for random bumps."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(bumps):
        u = random_bump_field(grid, fam.dim_v, rng)
        lhs = weighted_integral(u, grid.n - 1, 1.0)
        out.append(lhs / rank_one_rhs(fam, u))
    return np.array(out)


def rank_one_violation_family(
    fam: RankOneFamily,
    xi: Sequence,
    v: Sequence,
    lambdas: Sequence[float],
    grid: Grid,
    width: float = 1.0,
) -> ExperimentSeries:
    """u_lam(x) = phi(xi . x) psi(lam (|xi|^2 x - (xi . x) xi)) v along a violating (xi, v)."""
    xi_e = tuple(as_fraction(t) for t in xi)
    v_e = tuple(as_fraction(t) for t in v)
    if not rank_one_violation(fam, xi_e, v_e):
        raise ValueError("(xi, v) does not violate the spanning condition")
    xf = np.array([float(t) for t in xi_e])
    vf = np.array([float(t) for t in v_e])
    c = grid.coords()
    rows = []
    for lam in lambdas:
        along = np.tensordot(xf, c, axes=(0, 0))
        across = lam * (xf @ xf * c - along[None] * xf.reshape((-1,) + (1,) * grid.n))
        prof = bump_1d(along / width) * radial_bump(across, width)
        u = GridField(grid, vf.reshape((-1,) + (1,) * grid.n) * prof)
        lhs = weighted_integral(u, grid.n - 1, 1.0)
        rows.append(_row(lam, lhs, rank_one_rhs(fam, u)))
    return ExperimentSeries("rank-one-violation", tuple(rows))
