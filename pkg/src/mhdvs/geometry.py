"""Interface geometry and terrain-following strip coordinates.

The moving boundary is a graph x3 = f(x1, x2) inside the slab [-1, 1].  Each
phase occupies Omega_f^s = { f < x3 < 1 } (s = +1) or { -1 < x3 < f } (s = -1)
and is pulled back to the reference box T^2 x [0, 1] by the stretch map

    x3 = phi(y, r) = (1 - r) f(y) + r s,      r = 0 interface, r = 1 wall,

so phi_r = s - f never vanishes while |f| <= 1 - c0.  Partial derivatives
transform as

    d_i = d_{y_i} - a_i d_r,   a_i = (1 - r) f_i / phi_r,      i = 1, 2
    d_3 = c d_r,               c = 1 / phi_r,

with f_i the spectral horizontal derivatives of f.  The expanded Laplacian in
these coordinates is

    Lap u = Lap_y u - 2 a_i d_{y_i} d_r u + A d_r^2 u + b d_r u,
    A = ((1-r)^2 |grad f|^2 + 1) / phi_r^2,
    b = -(1-r) (Lap_y f / phi_r + 2 |grad f|^2 / phi_r^2).

Vertical grids are uniform in r; traces at r = 0 take spectral horizontal
derivatives and a one-sided five-point vertical stencil (the extra vertical
order keeps boundary-operator eigenvalues accurate on coarse desk grids).
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np

from .errors import GraphBoundViolated, NonInjectiveMap
from .spectral import FourierField2D, Grid2D, dealias, fft2, ifft2


def deriv_values(values: np.ndarray, grid: Grid2D, axis: int) -> np.ndarray:
    """Spectral d/dx_axis (axis in {1,2}) of (..., ny, nx) value arrays."""
    K = grid.K1 if axis == 1 else grid.K2
    return ifft2(1j * K * fft2(values)).real


def dealias_values(values: np.ndarray, grid: Grid2D) -> np.ndarray:
    return ifft2(grid.dealias_mask * fft2(values)).real


class Interface:
    """Graph interface f with clearance c0 from the walls.

    Raises GraphBoundViolated unless -(1 - c0) <= f <= 1 - c0 everywhere.
    """

    def __init__(self, f: FourierField2D, c0: float = 0.1):
        if not 0.0 < c0 < 0.5:
            raise ValueError(f"c0={c0} must lie in (0, 1/2)")
        self.f = f
        self.c0 = float(c0)
        self.grid = f.grid
        fmax = float(np.max(np.abs(f.values)))
        if fmax > 1.0 - self.c0:
            raise GraphBoundViolated(
                f"max |f| = {fmax:.6f} exceeds 1 - c0 = {1.0 - self.c0:.6f}"
            )

    @classmethod
    def from_function(cls, grid: Grid2D, fn, c0: float = 0.1) -> "Interface":
        return cls(FourierField2D.from_function(grid, fn), c0=c0)

    @classmethod
    def flat(cls, grid: Grid2D, c0: float = 0.1) -> "Interface":
        return cls(FourierField2D.zeros(grid), c0=c0)

    @cached_property
    def is_flat(self) -> bool:
        return float(np.max(np.abs(self.f.values))) == 0.0

    @cached_property
    def gradf(self) -> tuple:
        return (self.f.deriv(1).values, self.f.deriv(2).values)

    @cached_property
    def hessf(self) -> tuple:
        """(f11, f12, f22) spectral second derivatives."""
        d1 = self.f.deriv(1)
        return (d1.deriv(1).values, d1.deriv(2).values, self.f.deriv(2).deriv(2).values)

    @cached_property
    def lapf(self) -> np.ndarray:
        f11, _, f22 = self.hessf
        return f11 + f22

    @cached_property
    def grad_sq(self) -> np.ndarray:
        f1, f2 = self.gradf
        return f1 * f1 + f2 * f2

    @cached_property
    def metric_S(self) -> np.ndarray:
        """S = 1 + |grad f|^2."""
        return 1.0 + self.grad_sq

    @cached_property
    def sup_grad(self) -> float:
        return float(np.sqrt(np.max(self.grad_sq)))


def normal_vector(interface: Interface) -> tuple:
    """Non-unit upward normal N = (-f_1, -f_2, 1) on the interface grid."""
    f1, f2 = interface.gradf
    return (-f1, -f2, np.ones_like(f1))


def mean_curvature(interface: Interface) -> FourierField2D:
    """H(f) = div( grad f / sqrt(1 + |grad f|^2) ), dealiased flux components.

    The divergence form keeps the result exactly mean-free.
    """
    g = interface.grid
    f1, f2 = interface.gradf
    w = 1.0 / np.sqrt(interface.metric_S)
    q1 = dealias(FourierField2D.from_values(g, f1 * w))
    q2 = dealias(FourierField2D.from_values(g, f2 * w))
    return q1.deriv(1) + q2.deriv(2)


# ----------------------------------------------------------------------------
# vertical finite differences (uniform r in [0, 1])


def deriv_r(values: np.ndarray, dr: float) -> np.ndarray:
    """Centered d/dr with 2nd-order one-sided rows at both ends.

    r is axis -3, so (nz, ny, nx) arrays and batches (..., nz, ny, nx) both
    work.
    """
    v = values
    out = np.empty_like(v)
    out[..., 1:-1, :, :] = (v[..., 2:, :, :] - v[..., :-2, :, :]) / (2.0 * dr)
    out[..., 0, :, :] = (-3.0 * v[..., 0, :, :] + 4.0 * v[..., 1, :, :] - v[..., 2, :, :]) / (
        2.0 * dr
    )
    out[..., -1, :, :] = (3.0 * v[..., -1, :, :] - 4.0 * v[..., -2, :, :] + v[..., -3, :, :]) / (
        2.0 * dr
    )
    return out


def deriv_rr(values: np.ndarray, dr: float) -> np.ndarray:
    """Compact second difference along axis -3; one-sided rows at both ends."""
    v = values
    out = np.empty_like(v)
    out[..., 1:-1, :, :] = (
        v[..., 2:, :, :] - 2.0 * v[..., 1:-1, :, :] + v[..., :-2, :, :]
    ) / (dr * dr)
    out[..., 0, :, :] = (
        2.0 * v[..., 0, :, :] - 5.0 * v[..., 1, :, :] + 4.0 * v[..., 2, :, :] - v[..., 3, :, :]
    ) / (dr * dr)
    out[..., -1, :, :] = (
        2.0 * v[..., -1, :, :]
        - 5.0 * v[..., -2, :, :]
        + 4.0 * v[..., -3, :, :]
        - v[..., -4, :, :]
    ) / (dr * dr)
    return out


def dr_trace0(values: np.ndarray, dr: float) -> np.ndarray:
    """One-sided five-point d/dr at r = 0 along axis -3 (O(dr^4))."""
    v = values
    return (
        -25.0 / 12.0 * v[..., 0, :, :]
        + 4.0 * v[..., 1, :, :]
        - 3.0 * v[..., 2, :, :]
        + 4.0 / 3.0 * v[..., 3, :, :]
        - 0.25 * v[..., 4, :, :]
    ) / dr


def dr_trace1(values: np.ndarray, dr: float) -> np.ndarray:
    """One-sided five-point d/dr at r = 1 along axis -3 (O(dr^4))."""
    v = values
    return (
        25.0 / 12.0 * v[..., -1, :, :]
        - 4.0 * v[..., -2, :, :]
        + 3.0 * v[..., -3, :, :]
        - 4.0 / 3.0 * v[..., -4, :, :]
        + 0.25 * v[..., -5, :, :]
    ) / dr


# ----------------------------------------------------------------------------
# mapped strip grids


class MappedGrid3D:
    """Stretch-map metric data for one phase, cached on (interface, side, nz)."""

    def __init__(self, interface: Interface, side: int, nz: int):
        if side not in (+1, -1):
            raise ValueError("side must be +1 or -1")
        if nz < 9:
            raise ValueError(f"nz={nz} too small for the vertical stencils")
        self.interface = interface
        self.grid = interface.grid
        self.side = int(side)
        self.nz = int(nz)
        self.dr = 1.0 / (self.nz - 1)
        self.r = np.linspace(0.0, 1.0, self.nz)

    @property
    def shape(self) -> tuple:
        return (self.nz, self.grid.ny, self.grid.nx)

    @cached_property
    def phi_r(self) -> np.ndarray:
        """phi_r = side - f, shape (ny, nx); r-independent."""
        return self.side - self.interface.f.values

    @cached_property
    def cvert(self) -> np.ndarray:
        return 1.0 / self.phi_r

    @cached_property
    def one_minus_r(self) -> np.ndarray:
        return (1.0 - self.r)[:, None, None]

    @cached_property
    def a1(self) -> np.ndarray:
        f1, _ = self.interface.gradf
        return self.one_minus_r * (f1 / self.phi_r)[None]

    @cached_property
    def a2(self) -> np.ndarray:
        _, f2 = self.interface.gradf
        return self.one_minus_r * (f2 / self.phi_r)[None]

    @cached_property
    def lap_A(self) -> np.ndarray:
        """Coefficient of d_r^2 in the expanded Laplacian."""
        gs = self.interface.grad_sq
        return (self.one_minus_r**2 * gs[None] + 1.0) / (self.phi_r**2)[None]

    @cached_property
    def lap_b(self) -> np.ndarray:
        """Coefficient of d_r in the expanded Laplacian."""
        gs = self.interface.grad_sq
        lf = self.interface.lapf
        return -self.one_minus_r * (lf / self.phi_r + 2.0 * gs / self.phi_r**2)[None]

    @cached_property
    def x3(self) -> np.ndarray:
        """Physical heights of the grid nodes, shape (nz, ny, nx)."""
        return self.one_minus_r * self.interface.f.values[None] + self.r[:, None, None] * self.side

    @property
    def is_flat(self) -> bool:
        return self.interface.is_flat

    # -- first-order mapped operators (value arrays in, value arrays out) ---
    def grad(self, u: np.ndarray) -> tuple:
        """(d_1 u, d_2 u, d_3 u) with spectral horizontal / FD vertical parts."""
        du = deriv_r(u, self.dr)
        g1 = deriv_values(u, self.grid, 1) - self.a1 * du
        g2 = deriv_values(u, self.grid, 2) - self.a2 * du
        g3 = self.cvert[None] * du
        return (g1, g2, g3)

    def div(self, F1: np.ndarray, F2: np.ndarray, F3: np.ndarray) -> np.ndarray:
        d1 = deriv_values(F1, self.grid, 1) - self.a1 * deriv_r(F1, self.dr)
        d2 = deriv_values(F2, self.grid, 2) - self.a2 * deriv_r(F2, self.dr)
        d3 = self.cvert[None] * deriv_r(F3, self.dr)
        return d1 + d2 + d3

    def curl(self, F1: np.ndarray, F2: np.ndarray, F3: np.ndarray) -> tuple:
        dF1 = deriv_r(F1, self.dr)
        dF2 = deriv_r(F2, self.dr)
        dF3 = deriv_r(F3, self.dr)
        d2F3 = deriv_values(F3, self.grid, 2) - self.a2 * dF3
        d3F2 = self.cvert[None] * dF2
        d3F1 = self.cvert[None] * dF1
        d1F3 = deriv_values(F3, self.grid, 1) - self.a1 * dF3
        d1F2 = deriv_values(F2, self.grid, 1) - self.a1 * dF2
        d2F1 = deriv_values(F1, self.grid, 2) - self.a2 * dF1
        return (d2F3 - d3F2, d3F1 - d1F3, d1F2 - d2F1)

    def trace_gradient(self, u: np.ndarray) -> tuple:
        """Physical gradient restricted to the interface layer r = 0."""
        du0 = dr_trace0(u, self.dr)
        f1, f2 = self.interface.gradf
        pr = self.phi_r
        u0 = u[..., 0, :, :]
        g1 = deriv_values(u0, self.grid, 1) - (f1 / pr) * du0
        g2 = deriv_values(u0, self.grid, 2) - (f2 / pr) * du0
        g3 = du0 / pr
        return (g1, g2, g3)

    def normal_dot_trace_gradient(self, u: np.ndarray) -> np.ndarray:
        """N . grad u on the interface layer, N = (-f1, -f2, 1)."""
        g1, g2, g3 = self.trace_gradient(u)
        f1, f2 = self.interface.gradf
        return -f1 * g1 - f2 * g2 + g3

    def normal_trace(self, F1: np.ndarray, F2: np.ndarray, F3: np.ndarray) -> np.ndarray:
        """F . N on the interface layer, N = (-f1, -f2, 1)."""
        f1, f2 = self.interface.gradf
        return -f1 * F1[..., 0, :, :] - f2 * F2[..., 0, :, :] + F3[..., 0, :, :]


# ----------------------------------------------------------------------------
# harmonic coordinates (diagnostic map, not the production stretch map)


class HarmonicMap:
    """Harmonic coordinate change between a reference interface and f."""

    def __init__(self, f: Interface, fstar: Interface, nz: int, x3_by_side: dict):
        self.f = f
        self.fstar = fstar
        self.nz = nz
        self.dr = 1.0 / (nz - 1)
        self.x3_by_side = x3_by_side

    def vertical(self, side: int) -> np.ndarray:
        return self.x3_by_side[side]

    def jacobian_min(self, side: int) -> float:
        """min over the grid of side * d_r x3 (positive iff injective columns)."""
        return float(np.min(self.side_jac(side)))

    def side_jac(self, side: int) -> np.ndarray:
        return side * deriv_r(self.x3_by_side[side], self.dr)


def harmonic_coordinates(f: Interface, fstar: Interface = None, nz: int = 17) -> HarmonicMap:
    """Componentwise-harmonic map of the fstar strips onto the f strips.

    Horizontal components are the identity; the vertical component solves
    Laplace's equation on each reference strip with Dirichlet data f on the
    interface and +-1 on the walls.  A flat reference (fstar None or flat)
    uses the exact per-mode sinh profiles; otherwise the mapped solver is
    used.  Raises NonInjectiveMap when a column's vertical Jacobian loses
    positivity.
    """
    g = f.grid
    if fstar is None:
        fstar = Interface.flat(g, c0=f.c0)
    if fstar.grid is not g:
        raise ValueError("f and fstar must share one grid")

    x3_by_side = {}
    if fstar.is_flat:
        r = np.linspace(0.0, 1.0, nz)
        c = f.f.coeffs.copy()
        mean = c[0, 0].real
        c[0, 0] = 0.0
        kabs = g.kabs
        for side in (+1, -1):
            # mean part interpolates linearly; fluctuations decay like sinh
            x3 = np.empty((nz, g.ny, g.nx))
            for j, rj in enumerate(r):
                prof = np.ones_like(kabs)
                nzm = kabs > 0
                prof[nzm] = np.sinh(kabs[nzm] * (1.0 - rj)) / np.sinh(kabs[nzm])
                layer = ifft2(c * prof * (g.nx * g.ny)).real + (1.0 - rj) * mean
                x3[j] = layer + rj * side
            x3_by_side[side] = x3
    else:
        from .elliptic import EllipticSide

        for side in (+1, -1):
            solver = EllipticSide(MappedGrid3D(fstar, side, nz))
            wall = np.full((g.ny, g.nx), float(side))
            x3_by_side[side] = solver.solve_laplace_dirichlet(f.f.values, wall)

    hmap = HarmonicMap(f, fstar, nz, x3_by_side)
    for side in (+1, -1):
        jmin = hmap.jacobian_min(side)
        if jmin <= 0.0:
            raise NonInjectiveMap(
                f"side {side:+d}: min vertical Jacobian {jmin:.3e} is not positive"
            )
    return hmap


def pullback_field(values: np.ndarray, hmap: HarmonicMap, side: int) -> np.ndarray:
    """Compose a bulk field (stored on the f stretch grid) with the harmonic map.

    The stretch map of f is inverted in closed form, then each column is
    interpolated with a four-point Lagrange stencil (cubic order).
    """
    values = np.asarray(values)
    nz = values.shape[0]
    if nz != hmap.nz:
        raise ValueError("field and map must share the vertical resolution")
    fvals = hmap.f.f.values
    x3q = hmap.x3_by_side[side]
    # invert x3 = (1 - r) f + r s  ->  r = (x3 - f) / (s - f)
    rq = (x3q - fvals[None]) / (side - fvals)[None]
    rq = np.clip(rq, 0.0, 1.0)
    return interp_columns_cubic(values, rq, 1.0 / (nz - 1))


def interp_columns_cubic(values: np.ndarray, rq: np.ndarray, dr: float) -> np.ndarray:
    """Vertical 4-point Lagrange interpolation of (nz, ny, nx) data at rq."""
    nz = values.shape[0]
    pos = rq / dr
    j0 = np.clip(np.floor(pos).astype(int) - 1, 0, nz - 4)
    t = pos - j0
    out = np.zeros_like(rq, dtype=values.dtype)
    for m in range(4):
        w = np.ones_like(t)
        for n in range(4):
            if n != m:
                w = w * (t - n) / (m - n)
        out += w * np.take_along_axis(values, j0 + m, axis=0)
    return out
