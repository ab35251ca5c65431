"""Sampled fields on half-cell-offset periodic grids and spectral calculus on them.

Nodes are ``x_j = -L + (j + 1/2) h`` with ``h = 2L/N`` on every axis, so the
origin is never a node. With the transform convention
``u_hat(xi) = int u(x) exp(-i xi.x) dx`` the discrete counterpart is

    u_hat(xi_m) ~ h^n exp(-i xi_m . x_0) fftn(u)[m],   xi_m = 2 pi fftfreq(N, h).

Multipliers do not need the phase factor since it cancels in
``ifftn(M * fftn(u))``. Frequencies on a Nyquist plane are dropped by every
spectral operation here so that real fields stay real and compositions of
multipliers stay consistent.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .operator import HomOperator


@dataclass(frozen=True)
class Grid:
    n: int
    N: int
    L: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if self.N < 4 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 4, got {self.N}")
        if not self.L > 0:
            raise ValueError("box half-width must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    def axis(self) -> np.ndarray:
        return -self.L + (np.arange(self.N) + 0.5) * self.h

    def coords(self) -> np.ndarray:
        """Node coordinates, shape (n,) + shape."""
        return _coords(self.n, self.N, self.L)

    def radius(self) -> np.ndarray:
        return _radius(self.n, self.N, self.L)

    def freq_axis(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.N, self.h)

    def wavevectors(self) -> np.ndarray:
        """Frequencies, shape shape + (n,)."""
        return _wavevectors(self.n, self.N, self.L)

    def spectral_mask(self) -> np.ndarray:
        """False on the DC mode and on every Nyquist plane."""
        return _mask(self.n, self.N)

    def nyquist_mask(self) -> np.ndarray:
        """False on every Nyquist plane only."""
        return _nyquist(self.n, self.N)


@lru_cache(maxsize=16)
def _coords(n: int, N: int, L: float) -> np.ndarray:
    ax = -L + (np.arange(N) + 0.5) * (2.0 * L / N)
    out = np.stack(np.meshgrid(*([ax] * n), indexing="ij"))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=16)
def _radius(n: int, N: int, L: float) -> np.ndarray:
    out = np.sqrt(np.sum(_coords(n, N, L) ** 2, axis=0))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=16)
def _wavevectors(n: int, N: int, L: float) -> np.ndarray:
    ax = 2.0 * np.pi * np.fft.fftfreq(N, 2.0 * L / N)
    out = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=16)
def _nyquist(n: int, N: int) -> np.ndarray:
    idx = np.arange(N)
    grids = np.meshgrid(*([idx] * n), indexing="ij")
    keep = np.ones((N,) * n, dtype=bool)
    for g in grids:
        keep &= g != N // 2
    keep.setflags(write=False)
    return keep


@lru_cache(maxsize=16)
def _mask(n: int, N: int) -> np.ndarray:
    keep = _nyquist(n, N).copy()
    keep[(0,) * n] = False
    keep.setflags(write=False)
    return keep


@dataclass(frozen=True)
class GridField:
    """Vector field sampled on a grid: ``values`` has shape (d,) + (N,)*n."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == self.grid.n:
            vals = vals[None]
        if vals.shape[1:] != self.grid.shape:
            raise ValueError(f"values have shape {vals.shape}, grid expects (d,) + {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.grid.n

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[[np.ndarray], np.ndarray]) -> "GridField":
        """Sample ``func(coords)`` where coords has shape (n,) + grid shape."""
        return cls(grid, np.asarray(func(grid.coords()), dtype=float))

    @classmethod
    def zeros(cls, grid: Grid, d: int) -> "GridField":
        return cls(grid, np.zeros((d,) + grid.shape))

    def pointwise_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values**2, axis=0))

    def integral_abs(self) -> float:
        return float(np.sum(self.pointwise_norm()) * self.grid.cell_volume)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.values**2) * self.grid.cell_volume))

    def boundary_magnitude(self, layer: int = 2) -> float:
        """Largest pointwise norm within ``layer`` cells of the box boundary."""
        mag = self.pointwise_norm()
        inner = tuple(slice(layer, self.grid.N - layer) for _ in range(self.n))
        masked = mag.copy()
        masked[inner] = 0.0
        return float(masked.max())

    def __add__(self, other: "GridField") -> "GridField":
        return GridField(self.grid, self.values + other.values)

    def __sub__(self, other: "GridField") -> "GridField":
        return GridField(self.grid, self.values - other.values)

    def scale(self, c: float) -> "GridField":
        return GridField(self.grid, c * self.values)


def _axes(n: int) -> tuple[int, ...]:
    return tuple(range(1, n + 1))


def forward(field: GridField) -> np.ndarray:
    return sfft.fftn(field.values, axes=_axes(field.n))


def inverse(grid: Grid, spectrum: np.ndarray) -> GridField:
    return GridField(grid, sfft.ifftn(spectrum, axes=_axes(grid.n)).real)


def _half(arr: np.ndarray, N: int) -> np.ndarray:
    """Restrict a full-spectrum array (grid axes leading) to the real-transform half."""
    return arr[(slice(None),) * (arr.ndim - 1) + (slice(0, N // 2 + 1),)] if arr.ndim else arr


def forward_real(field: GridField) -> np.ndarray:
    """Half spectrum of a real field; the last grid axis keeps N/2 + 1 frequencies."""
    return sfft.rfftn(field.values, axes=_axes(field.n))


def inverse_real(grid: Grid, spectrum: np.ndarray) -> GridField:
    return GridField(grid, sfft.irfftn(spectrum, s=grid.shape, axes=_axes(grid.n)))


@lru_cache(maxsize=64)
def _half_monomial(grid: Grid, alpha: tuple[int, ...]) -> np.ndarray:
    out = _half(monomial_multiplier(grid, alpha), grid.N).copy()
    out.setflags(write=False)
    return out


def from_spectrum(grid: Grid, spectrum: Callable[[np.ndarray], np.ndarray]) -> GridField:
    """Sample the field whose continuous transform is ``spectrum(xi)``.

    ``spectrum`` maps frequencies of shape grid shape + (n,) to complex values
    of shape (d,) + grid shape. Nyquist planes are dropped.
    """
    xi = grid.wavevectors()
    x0 = np.full(grid.n, -grid.L + 0.5 * grid.h)
    vals = np.asarray(spectrum(xi), dtype=complex)
    if vals.ndim == grid.n:
        vals = vals[None]
    phase = np.exp(1j * (xi @ x0))
    vals = vals * phase * grid.nyquist_mask() / grid.cell_volume
    return inverse(grid, vals)


def monomial_multiplier(grid: Grid, alpha: tuple[int, ...]) -> np.ndarray:
    """(i xi)^alpha on the frequency grid, Nyquist planes set to zero."""
    xi = grid.wavevectors()
    out = np.ones(grid.shape, dtype=complex)
    for j, a in enumerate(alpha):
        if a:
            out = out * (1j * xi[..., j]) ** a
    return out * grid.nyquist_mask()


def apply_operator(A: HomOperator, u: GridField, method: str = "spectral") -> GridField:
    """A(D)u = sum_alpha A_alpha d^alpha u on the grid."""
    if u.d != A.dim_v or u.n != A.n:
        raise ValueError(f"field has d={u.d}, n={u.n}; operator expects dim_v={A.dim_v}, n={A.n}")
    if method == "spectral":
        uh = forward_real(u)
        acc = np.zeros((A.dim_e,) + uh.shape[1:], dtype=complex)
        for alpha, mat in A.terms.items():
            coeffs = mat.to_numpy()
            mult = _half_monomial(u.grid, alpha)
            for v in range(A.dim_v):
                if not coeffs[:, v].any():
                    continue
                w = uh[v] * mult
                for e in np.flatnonzero(coeffs[:, v]):
                    acc[e] += coeffs[e, v] * w
        return inverse_real(u.grid, acc)
    if method == "fd":
        out = np.zeros((A.dim_e,) + u.grid.shape)
        for alpha, mat in A.terms.items():
            deriv = fd_derivative(u.values, alpha, u.grid.h)
            out += np.tensordot(mat.to_numpy(), deriv, axes=(1, 0))
        return GridField(u.grid, out)
    raise ValueError(f"unknown derivative method {method!r}")


def _fd_first(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Fourth-order periodic central difference along ``axis``."""
    r = np.roll
    return (-r(values, -2, axis) + 8 * r(values, -1, axis) - 8 * r(values, 1, axis) + r(values, 2, axis)) / (12 * h)


def fd_derivative(values: np.ndarray, alpha: tuple[int, ...], h: float) -> np.ndarray:
    out = values
    for j, a in enumerate(alpha):
        for _ in range(a):
            out = _fd_first(out, j + 1, h)
    return out


def derivative_tensor(u: GridField, order: int, method: str = "spectral") -> GridField:
    """D^order u with components indexed by (i_1, ..., i_order, v) in C order."""
    n = u.n
    if order == 0:
        return u
    if method == "spectral":
        uh = forward_real(u)
        comps = np.empty((n,) * order + uh.shape, dtype=complex)
        for idx in np.ndindex(*((n,) * order)):
            alpha = tuple(idx.count(j) for j in range(n))
            comps[idx] = uh * _half_monomial(u.grid, alpha)
        flat = comps.reshape((-1,) + uh.shape[1:])
        return inverse_real(u.grid, flat)
    if method == "fd":
        comps = np.empty((n,) * order + (u.d,) + u.grid.shape)
        for idx in np.ndindex(*((n,) * order)):
            alpha = tuple(idx.count(j) for j in range(n))
            comps[idx] = fd_derivative(u.values, alpha, u.grid.h)
        return GridField(u.grid, comps.reshape((-1,) + u.grid.shape))
    raise ValueError(f"unknown derivative method {method!r}")
