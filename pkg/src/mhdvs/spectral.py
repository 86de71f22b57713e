"""Spectral tools on the doubly periodic square [0, 2pi)^2.

Conventions used across the code base:

* real surface fields u(x1, x2) are stored as arrays of shape (ny, nx) with
  values[j, i] = u(x1[i], x2[j]), i.e. x1 varies fastest in memory;
* Fourier coefficients are trigonometric-interpolant coefficients,

      u(x) = sum_xi c(xi) exp(i xi . x),   c = fft2(values) / (nx * ny),

  so c lives on the integer lattice xi in [-n/2, n/2)^2;
* norms carry the measure of the torus: ||u||_L2^2 = (2pi)^2 sum_xi |c(xi)|^2,
  hence ||cos x1||_L2 = sqrt(2 pi^2).

Littlewood-Paley machinery is built from the classical smooth step

    s(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)}),   s = 0 for t <= 0, 1 for t >= 1,

with zeta(r) = s((1.9 - |r|)/0.8), equal to 1 for |r| <= 1.1 and 0 for
|r| >= 1.9.  Setting zeta_k(r) = zeta(2^-k r), the dyadic blocks use
phi_0 = zeta and phi_k = zeta_k - zeta_{k-1}; on the integer lattice the
partition sum_{k=0}^{K} phi_k equals 1 exactly once 1.1 * 2^K exceeds the
largest |xi| present.

The low-frequency filter psi vanishes for |r| <= 1/2 and equals 1 for
|r| >= 1; on the integer lattice it therefore removes exactly the mean mode
and passes every nonzero mode unchanged, while still cutting the origin
smoothly for symbols that are singular at xi = 0.
"""

from __future__ import annotations

import math
import os
from functools import cached_property

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * math.pi


def fft_workers() -> int:
    """Worker-thread cap for FFT calls, from MHDVS_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("MHDVS_THREADS", "1")))
    except ValueError:
        return 1


def fft2(values: np.ndarray) -> np.ndarray:
    return sfft.fft2(values, axes=(-2, -1), workers=fft_workers())


def ifft2(coeffs: np.ndarray) -> np.ndarray:
    return sfft.ifft2(coeffs, axes=(-2, -1), workers=fft_workers())


def rfft2(values: np.ndarray) -> np.ndarray:
    return sfft.rfft2(values, axes=(-2, -1), workers=fft_workers())


def irfft2(coeffs: np.ndarray, shape: tuple) -> np.ndarray:
    return sfft.irfft2(coeffs, s=shape, axes=(-2, -1), workers=fft_workers())


# ----------------------------------------------------------------------------
# cutoff profiles


def smooth_step(t):
    """C^infinity step: 0 for t <= 0, 1 for t >= 1, strictly increasing between."""
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    if np.any(mid):
        tm = t[mid]
        a = np.exp(-1.0 / tm)
        b = np.exp(-1.0 / (1.0 - tm))
        out[mid] = a / (a + b)
    return float(out[0]) if scalar else out


def zeta(r):
    """Radial bump: 1 for |r| <= 1.1, 0 for |r| >= 1.9."""
    return smooth_step((1.9 - np.abs(r)) / 0.8)


def zeta_k(k: int, r):
    """zeta(2^-k r); for negative k this passes only the origin on the lattice."""
    return zeta(np.ldexp(np.abs(r), -k) if isinstance(r, np.ndarray) else abs(r) * 2.0 ** (-k))


def phi_k(k: int, r):
    """Dyadic annulus weight: phi_0 = zeta, phi_k = zeta_k - zeta_{k-1} (k >= 1)."""
    if k < 0:
        return np.zeros_like(np.asarray(r, dtype=float))
    if k == 0:
        return zeta(r)
    return zeta_k(k, r) - zeta_k(k - 1, r)


def psi(r):
    """Low-frequency filter: 0 for |r| <= 1/2, 1 for |r| >= 1."""
    return smooth_step(2.0 * np.abs(r) - 1.0)


# ----------------------------------------------------------------------------
# grids and fields


class Grid2D:
    """Integer-wavenumber bookkeeping for an (ny, nx) collocation grid.

    nx and ny must be at least 8, divisible by 4 and {2,3}-smooth; this admits
    the production sizes (48, 64, 96, ...) while rejecting shapes the dealias
    and block logic was never checked on.
    """

    _cache: dict = {}

    def __init__(self, nx: int, ny: int):
        validate_grid_size(nx, "nx")
        validate_grid_size(ny, "ny")
        self.nx = int(nx)
        self.ny = int(ny)
        self.x1 = np.arange(self.nx) * (TWO_PI / self.nx)
        self.x2 = np.arange(self.ny) * (TWO_PI / self.ny)
        self.X1, self.X2 = np.meshgrid(self.x1, self.x2)
        k1 = np.rint(np.fft.fftfreq(self.nx) * self.nx).astype(int)
        k2 = np.rint(np.fft.fftfreq(self.ny) * self.ny).astype(int)
        self.K1, self.K2 = np.meshgrid(k1, k2)
        self.ksq = (self.K1.astype(float)) ** 2 + (self.K2.astype(float)) ** 2
        self.kabs = np.sqrt(self.ksq)

    @classmethod
    def get(cls, nx: int, ny: int) -> "Grid2D":
        key = (int(nx), int(ny))
        if key not in cls._cache:
            cls._cache[key] = cls(nx, ny)
        return cls._cache[key]

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        # standard 2/3 rule, applied per horizontal direction
        return (np.abs(self.K1) <= self.nx // 3) & (np.abs(self.K2) <= self.ny // 3)

    # -- half-spectrum (rfft2) lattices, used by the bulk solvers ----------
    @cached_property
    def rK1(self) -> np.ndarray:
        k1 = np.arange(self.nx // 2 + 1)
        k2 = np.rint(np.fft.fftfreq(self.ny) * self.ny).astype(int)
        return np.meshgrid(k1, k2)[0]

    @cached_property
    def rK2(self) -> np.ndarray:
        k1 = np.arange(self.nx // 2 + 1)
        k2 = np.rint(np.fft.fftfreq(self.ny) * self.ny).astype(int)
        return np.meshgrid(k1, k2)[1]

    @cached_property
    def rksq(self) -> np.ndarray:
        return self.rK1.astype(float) ** 2 + self.rK2.astype(float) ** 2

    @cached_property
    def rK1_deriv(self) -> np.ndarray:
        """i k1 multiplier lattice with the Nyquist column zeroed (real data)."""
        m = self.rK1.astype(float).copy()
        m[:, -1] = 0.0
        return 1j * m

    @cached_property
    def rK2_deriv(self) -> np.ndarray:
        m = self.rK2.astype(float).copy()
        m[self.rK2 == -(self.ny // 2)] = 0.0
        return 1j * m

    @cached_property
    def rdealias_mask(self) -> np.ndarray:
        return (np.abs(self.rK1) <= self.nx // 3) & (np.abs(self.rK2) <= self.ny // 3)

    @cached_property
    def n_blocks(self) -> int:
        """Largest dyadic index K needed so that zeta_K = 1 on the lattice."""
        maxk = math.hypot(self.nx / 2.0, self.ny / 2.0)
        return max(0, math.ceil(math.log2(maxk / 1.1)))

    @cached_property
    def block_weights(self) -> np.ndarray:
        """Array (K+1, ny, nx) of phi_k(|xi|); sums to 1 on the lattice."""
        K = self.n_blocks
        w = np.empty((K + 1, self.ny, self.nx))
        for k in range(K + 1):
            w[k] = phi_k(k, self.kabs)
        return w

    @cached_property
    def psi_weights(self) -> np.ndarray:
        return psi(self.kabs)

    def mode_index(self, k1: int, k2: int) -> tuple:
        """(row, col) position of the lattice point (k1, k2) in coefficient arrays."""
        return (int(k2) % self.ny, int(k1) % self.nx)


def validate_grid_size(n: int, name: str = "n") -> None:
    n = int(n)
    if n < 8 or n % 4 != 0:
        raise ValueError(f"{name}={n}: grid sizes must be >= 8 and divisible by 4")
    m = n
    for p in (2, 3):
        while m % p == 0:
            m //= p
    if m != 1:
        raise ValueError(f"{name}={n}: grid sizes must have no prime factors beyond 2 and 3")


class FourierField2D:
    """A real scalar field on the torus with lazily synchronized coefficients.

    Instances should be treated as immutable; all operations return new fields.
    """

    def __init__(self, grid: Grid2D, values: np.ndarray = None, coeffs: np.ndarray = None):
        if values is None and coeffs is None:
            raise ValueError("need values or coeffs")
        self.grid = grid
        self._values = None if values is None else np.asarray(values, dtype=float)
        if self._values is not None and self._values.shape != (grid.ny, grid.nx):
            raise ValueError(f"values shape {self._values.shape} != {(grid.ny, grid.nx)}")
        self._coeffs = None if coeffs is None else np.asarray(coeffs, dtype=complex)
        if self._coeffs is not None and self._coeffs.shape != (grid.ny, grid.nx):
            raise ValueError(f"coeffs shape {self._coeffs.shape} != {(grid.ny, grid.nx)}")

    # -- constructors ------------------------------------------------------
    @classmethod
    def from_values(cls, grid: Grid2D, values: np.ndarray) -> "FourierField2D":
        return cls(grid, values=values)

    @classmethod
    def from_coeffs(cls, grid: Grid2D, coeffs: np.ndarray) -> "FourierField2D":
        return cls(grid, coeffs=coeffs)

    @classmethod
    def zeros(cls, grid: Grid2D) -> "FourierField2D":
        return cls(grid, values=np.zeros((grid.ny, grid.nx)))

    @classmethod
    def from_function(cls, grid: Grid2D, fn) -> "FourierField2D":
        return cls(grid, values=np.asarray(fn(grid.X1, grid.X2), dtype=float))

    # -- lazy views --------------------------------------------------------
    @property
    def nx(self) -> int:
        return self.grid.nx

    @property
    def ny(self) -> int:
        return self.grid.ny

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            # imaginary residue of a Hermitian spectrum is roundoff; drop it
            self._values = ifft2(self._coeffs * (self.nx * self.ny)).real
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            self._coeffs = fft2(self._values) / (self.nx * self.ny)
        return self._coeffs

    # -- algebra -----------------------------------------------------------
    def __add__(self, other: "FourierField2D") -> "FourierField2D":
        return FourierField2D(self.grid, values=self.values + other.values)

    def __sub__(self, other: "FourierField2D") -> "FourierField2D":
        return FourierField2D(self.grid, values=self.values - other.values)

    def __mul__(self, a: float) -> "FourierField2D":
        return FourierField2D(self.grid, values=self.values * float(a))

    __rmul__ = __mul__

    def __neg__(self) -> "FourierField2D":
        return self * (-1.0)

    def mean(self) -> float:
        return float(self.values.mean())

    def deriv(self, axis: int) -> "FourierField2D":
        """Spectral partial derivative d/dx_axis, axis in {1, 2}."""
        K = self.grid.K1 if axis == 1 else self.grid.K2
        return FourierField2D.from_coeffs(self.grid, 1j * K * self.coeffs)


# ----------------------------------------------------------------------------
# multipliers, blocks, norms


def apply_multiplier(u: FourierField2D, m) -> FourierField2D:
    """Fourier multiplier: coeffs_out(xi) = m(xi) * coeffs_in(xi).

    m may be a callable m(K1, K2) -> array, an array over the lattice, or a
    scalar.
    """
    g = u.grid
    marr = m(g.K1, g.K2) if callable(m) else m
    return FourierField2D.from_coeffs(g, np.asarray(marr) * u.coeffs)


def dealias(u: FourierField2D) -> FourierField2D:
    return FourierField2D.from_coeffs(u.grid, u.coeffs * u.grid.dealias_mask)


def product(a: FourierField2D, b: FourierField2D) -> FourierField2D:
    """Pointwise product with 2/3-rule truncation of the result."""
    raw = FourierField2D(a.grid, values=a.values * b.values)
    return dealias(raw)


def lp_block(u: FourierField2D, k: int) -> FourierField2D:
    """Dyadic block Delta_k u; zero field for k < 0 or k > K(grid)."""
    g = u.grid
    if k < 0 or k > g.n_blocks:
        return FourierField2D.zeros(g)
    return FourierField2D.from_coeffs(g, g.block_weights[k] * u.coeffs)


def lowpass(u: FourierField2D, k: int) -> FourierField2D:
    """S_k u = sum_{j<=k} Delta_j u; zero field for k < 0."""
    g = u.grid
    if k < 0:
        return FourierField2D.zeros(g)
    return FourierField2D.from_coeffs(g, zeta_k(k, g.kabs) * u.coeffs)


class LPBlockSet:
    """The dyadic decomposition of one field; blocks[k] is Delta_k u."""

    def __init__(self, u: FourierField2D):
        self.grid = u.grid
        self.field = u
        self.blocks = [lp_block(u, k) for k in range(u.grid.n_blocks + 1)]

    def __len__(self) -> int:
        return len(self.blocks)

    def block(self, k: int) -> FourierField2D:
        if 0 <= k < len(self.blocks):
            return self.blocks[k]
        return FourierField2D.zeros(self.grid)

    def reconstruct(self) -> FourierField2D:
        c = np.zeros_like(self.field.coeffs)
        for b in self.blocks:
            c = c + b.coeffs
        return FourierField2D.from_coeffs(self.grid, c)


def lp_decompose(u: FourierField2D) -> LPBlockSet:
    return LPBlockSet(u)


def sobolev_norm(u: FourierField2D, s: float = 0.0) -> float:
    """H^s norm: sqrt((2pi)^2 sum (1+|xi|^2)^s |c(xi)|^2)."""
    g = u.grid
    w = (1.0 + g.ksq) ** s
    return float(TWO_PI * math.sqrt(np.sum(w * np.abs(u.coeffs) ** 2)))


def l2_norm(u: FourierField2D) -> float:
    return sobolev_norm(u, 0.0)


def hermitian_defect(u: FourierField2D) -> float:
    """max |c(-xi) - conj(c(xi))| over the lattice (0 for genuinely real data)."""
    c = u.coeffs
    flipped = np.roll(c[::-1, ::-1], shift=(1, 1), axis=(0, 1))
    return float(np.max(np.abs(flipped - np.conj(c))))
