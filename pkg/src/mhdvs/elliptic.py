"""Elliptic solves on the mapped strips.

All problems reduce to vertical line systems coupled horizontally by the
interface slope.  After an rfft2 in the horizontal directions the flat
interface operator decouples into small banded systems per wavenumber, which
are LU-factored once per (grid, nz) and reused; the curved-interface
operators are then solved by preconditioned Richardson iteration (the flat
inverse is the preconditioner, contraction ~ sup |grad f|), with a GMRES
fallback and a SolverDiverged error when that fails too.

Two discrete Laplacians coexist on purpose:

* the "compact" operator expands div grad analytically (spectral horizontal
  derivatives, 3-point vertical stencils, spectral-then-FD mixed terms) and
  is used where solution accuracy matters: harmonic extensions and the
  quadratic pressure problems;
* the "composed" operator is literally div_h(grad_h .) built from the same
  first-order mapped operators used by every residual check, and is used for
  the divergence-free projection and the div-curl correction, so that the
  divergence of a corrected field is a pure solver residual rather than a
  discretization artifact.

Residual tolerances are relative RMS over the full stacked system (interior
rows plus boundary rows).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from . import geometry as geo
from .errors import CompatibilityViolated, SolverDiverged
from .geometry import Interface, MappedGrid3D, deriv_r, deriv_rr
from .spectral import FourierField2D, Grid2D, irfft2, rfft2


def rms(a: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(a) ** 2)))


def _rms_last3(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.mean(np.abs(a) ** 2, axis=(-3, -2, -1)))


def dealias3(values: np.ndarray, grid: Grid2D) -> np.ndarray:
    """2/3-rule truncation of the horizontal spectrum of a strip field."""
    return irfft2(rfft2(values) * grid.rdealias_mask, (grid.ny, grid.nx))


def _as_values2(x, grid: Grid2D) -> np.ndarray:
    if x is None:
        return np.zeros((grid.ny, grid.nx))
    if isinstance(x, FourierField2D):
        return x.values
    return np.asarray(x, dtype=float)


# ---------------------------------------------------------------------------
# data types


class StripField3D:
    """Scalar field on a mapped strip grid, values of shape (nz, ny, nx)."""

    def __init__(self, grid3: MappedGrid3D, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != grid3.shape:
            raise ValueError(f"values shape {values.shape} != {grid3.shape}")
        self.grid3 = grid3
        self.values = values

    @classmethod
    def zeros(cls, grid3: MappedGrid3D) -> "StripField3D":
        return cls(grid3, np.zeros(grid3.shape))

    def interface_trace(self) -> np.ndarray:
        return self.values[0]

    def wall_trace(self) -> np.ndarray:
        return self.values[-1]

    def rms(self) -> float:
        return rms(self.values)


class VectorField3D:
    """Vector field on a mapped strip grid; comps is a tuple of three arrays."""

    def __init__(self, grid3: MappedGrid3D, comps):
        comps = tuple(np.asarray(c, dtype=float) for c in comps)
        if len(comps) != 3:
            raise ValueError("need exactly three components")
        for c in comps:
            if c.shape != grid3.shape:
                raise ValueError(f"component shape {c.shape} != {grid3.shape}")
        self.grid3 = grid3
        self.comps = comps

    @classmethod
    def zeros(cls, grid3: MappedGrid3D) -> "VectorField3D":
        z = np.zeros(grid3.shape)
        return cls(grid3, (z, z.copy(), z.copy()))

    @property
    def v1(self) -> np.ndarray:
        return self.comps[0]

    @property
    def v2(self) -> np.ndarray:
        return self.comps[1]

    @property
    def v3(self) -> np.ndarray:
        return self.comps[2]

    def div(self) -> np.ndarray:
        return self.grid3.div(*self.comps)

    def curl(self) -> "VectorField3D":
        return VectorField3D(self.grid3, self.grid3.curl(*self.comps))

    def normal_trace(self) -> np.ndarray:
        return self.grid3.normal_trace(*self.comps)

    def rms(self) -> float:
        return float(np.sqrt(np.mean([np.mean(c**2) for c in self.comps])))


@dataclass
class CompatReport:
    """Relative defects of the div-curl solvability constraints."""

    c1: float
    c2: float
    c3: float
    scale: float

    def worst(self) -> float:
        return max(self.c1, self.c2, self.c3)


@dataclass
class DivCurlReport:
    curl_res: float
    div_res: float
    trace_res: float
    wall_res: float
    mean_defect: float
    compat: CompatReport
    scale: float
    polished: bool = False
    solver: dict = field(default_factory=dict)

    def max_rel(self) -> float:
        return max(self.curl_res, self.div_res, self.trace_res, self.wall_res)


# ---------------------------------------------------------------------------
# banded kernel (no pivoting; systems are near-dominant)


def factor_banded(bands: np.ndarray):
    """LU-factor per-mode banded matrices.

    bands has shape (2p+1, nz, ...) where bands[d+p, j] is entry (j, j+d).
    Returns (B, mult) with retained upper bands and elimination multipliers.
    """
    p = (bands.shape[0] - 1) // 2
    nz = bands.shape[1]
    B = bands.copy()
    mult = np.zeros((p,) + bands.shape[1:])
    for i in range(1, nz):
        for ell in range(min(p, i), 0, -1):
            m = B[p - ell, i] / B[p, i - ell]
            mult[ell - 1, i] = m
            for k in range(1, p + 1):
                col = i - ell + k
                d = col - i
                if -p <= d <= p and col < nz:
                    B[d + p, i] = B[d + p, i] - m * B[k + p, i - ell]
    if not np.all(np.isfinite(B[p])):
        raise RuntimeError("banded factorization produced a non-finite pivot")
    return B, mult


def solve_banded_factored(factors, rhs: np.ndarray) -> np.ndarray:
    """Solve with factors from factor_banded; rhs shaped (..., nz, m1, m2)."""
    B, mult = factors
    p = (B.shape[0] - 1) // 2
    nz = B.shape[1]
    y = np.array(rhs, copy=True)
    for i in range(1, nz):
        acc = y[..., i, :, :]
        for ell in range(min(p, i), 0, -1):
            acc = acc - mult[ell - 1, i] * y[..., i - ell, :, :]
        y[..., i, :, :] = acc
    for i in range(nz - 1, -1, -1):
        acc = y[..., i, :, :]
        for k in range(1, p + 1):
            if i + k < nz:
                acc = acc - B[k + p, i] * y[..., i + k, :, :]
        y[..., i, :, :] = acc / B[p, i]
    return y


# ---------------------------------------------------------------------------
# flat-interface factor tables


def _vertical_matrices(nz: int, dr: float):
    eye = np.eye(nz)[:, :, None, None]
    D1 = deriv_r(eye, dr)[:, :, 0, 0].T
    D2 = deriv_rr(eye, dr)[:, :, 0, 0].T
    return D1, D2


# fourth-order vertical stencils, used only by the compact scalar solves; the
# field stencils in geometry stay second order (the projection absorber relies
# on their exact antiderivative pairing)


def _deriv_r4(u: np.ndarray, dr: float) -> np.ndarray:
    du = np.empty_like(u)
    du[..., 2:-2, :, :] = (
        u[..., :-4, :, :] - 8.0 * u[..., 1:-3, :, :] + 8.0 * u[..., 3:-1, :, :] - u[..., 4:, :, :]
    ) / (12.0 * dr)
    u0, u1, u2, u3, u4 = (u[..., j, :, :] for j in range(5))
    du[..., 0, :, :] = (-25.0 * u0 + 48.0 * u1 - 36.0 * u2 + 16.0 * u3 - 3.0 * u4) / (12.0 * dr)
    du[..., 1, :, :] = (-3.0 * u0 - 10.0 * u1 + 18.0 * u2 - 6.0 * u3 + u4) / (12.0 * dr)
    w0, w1, w2, w3, w4 = (u[..., -1 - j, :, :] for j in range(5))
    du[..., -1, :, :] = (25.0 * w0 - 48.0 * w1 + 36.0 * w2 - 16.0 * w3 + 3.0 * w4) / (12.0 * dr)
    du[..., -2, :, :] = (3.0 * w0 + 10.0 * w1 - 18.0 * w2 + 6.0 * w3 - w4) / (12.0 * dr)
    return du


def _deriv_rr4(u: np.ndarray, dr: float) -> np.ndarray:
    d = np.empty_like(u)
    d[..., 2:-2, :, :] = (
        -u[..., :-4, :, :]
        + 16.0 * u[..., 1:-3, :, :]
        - 30.0 * u[..., 2:-2, :, :]
        + 16.0 * u[..., 3:-1, :, :]
        - u[..., 4:, :, :]
    ) / (12.0 * dr**2)
    u0, u1, u2, u3, u4, u5 = (u[..., j, :, :] for j in range(6))
    d[..., 0, :, :] = (
        45.0 * u0 - 154.0 * u1 + 214.0 * u2 - 156.0 * u3 + 61.0 * u4 - 10.0 * u5
    ) / (12.0 * dr**2)
    d[..., 1, :, :] = (10.0 * u0 - 15.0 * u1 - 4.0 * u2 + 14.0 * u3 - 6.0 * u4 + u5) / (
        12.0 * dr**2
    )
    w0, w1, w2, w3, w4, w5 = (u[..., -1 - j, :, :] for j in range(6))
    d[..., -1, :, :] = (
        45.0 * w0 - 154.0 * w1 + 214.0 * w2 - 156.0 * w3 + 61.0 * w4 - 10.0 * w5
    ) / (12.0 * dr**2)
    d[..., -2, :, :] = (10.0 * w0 - 15.0 * w1 - 4.0 * w2 + 14.0 * w3 - 6.0 * w4 + w5) / (
        12.0 * dr**2
    )
    return d


def _vertical_matrices4(nz: int, dr: float):
    eye = np.eye(nz)[:, :, None, None]
    D1 = _deriv_r4(eye, dr)[:, :, 0, 0].T
    D2 = _deriv_rr4(eye, dr)[:, :, 0, 0].T
    return D1, D2


def _head_dr3(nz: int, dr: float) -> np.ndarray:
    row = np.zeros(nz)
    row[0], row[1], row[2] = -3.0, 4.0, -1.0
    return row / (2.0 * dr)


def _tail_dr3(nz: int, dr: float) -> np.ndarray:
    row = np.zeros(nz)
    row[-1], row[-2], row[-3] = 3.0, -4.0, 1.0
    return row / (2.0 * dr)


def _tail_dr5(nz: int, dr: float) -> np.ndarray:
    row = np.zeros(nz)
    row[-5:] = np.array([3.0, -16.0, 36.0, -48.0, 25.0]) / 12.0
    return row / dr


class FlatTables:
    """Factored flat-interface vertical systems, shared per (grid, nz).

    Kinds:
      'ext'  compact Laplacian, Dirichlet head / Neumann tail
      'dd'   compact Laplacian, Dirichlet head / Dirichlet tail
      'dc'   composed Laplacian, conormal (d/dr) head / Neumann tail

    The compact kinds use fourth-order vertical stencils (their traces feed
    the interface maps, where the accuracy budget is tightest) and stay
    benign under the no-pivot vectorized banded LU.  The composed kind
    matches the second-order field stencils and is not no-pivot safe: its
    interior splits into even/odd chains whose elimination hits exact zero
    pivots, so it gets pivoted dense per-mode inverses instead.  Its
    mean-mode block is singular (constants); a rank-one penalty at a node
    where the left null vector is nonzero makes it invertible without
    deleting any operator row.
    """

    _cache: dict = {}

    PINNED = ("dc",)

    def __init__(self, grid: Grid2D, nz: int):
        self.grid = grid
        self.nz = nz
        self.dr = 1.0 / (nz - 1)
        self.D1, self.D2 = _vertical_matrices(nz, self.dr)
        self.V = self.D1 @ self.D1
        self.D1_4, self.D2_4 = _vertical_matrices4(nz, self.dr)
        self._factors = {}
        self._nulls = {}

    @classmethod
    def get(cls, grid: Grid2D, nz: int) -> "FlatTables":
        key = (id(grid), nz)
        if key not in cls._cache:
            cls._cache[key] = cls(grid, nz)
        return cls._cache[key]

    def _dense_vertical(self, kind: str) -> tuple:
        nz, dr = self.nz, self.dr
        interior = np.zeros(nz)
        interior[1:-1] = 1.0
        if kind == "ext":
            M = self.D2_4.copy()
            M[0] = 0.0
            M[0, 0] = 1.0
            M[-1] = _tail_dr5(nz, dr)
        elif kind == "dd":
            M = self.D2_4.copy()
            M[0] = 0.0
            M[0, 0] = 1.0
            M[-1] = 0.0
            M[-1, -1] = 1.0
        elif kind == "dc":
            M = self.V.copy()
            M[0] = _head_dr3(nz, dr)
            M[-1] = _tail_dr3(nz, dr)
        else:
            raise ValueError(f"unknown kind {kind!r}")
        return M, interior

    def factors(self, kind: str):
        if kind not in self._factors:
            M, interior = self._dense_vertical(kind)
            nz = self.nz
            g = self.grid
            if kind in ("ext", "dd"):
                q = g.rksq
                bands = np.zeros((9, nz, g.ny, g.nx // 2 + 1))
                for d in range(-4, 5):
                    for j in range(nz):
                        jj = j + d
                        if 0 <= jj < nz:
                            bands[d + 4, j] = M[j, jj]
                bands[4] -= q[None] * interior[:, None, None]
                self._factors[kind] = ("banded", factor_banded(bands))
            else:
                q = g.rksq.ravel()
                A = np.broadcast_to(M, (q.size, nz, nz)).copy()
                idx = np.arange(nz)
                A[:, idx, idx] -= q[:, None] * interior[None, :]
                # the mean-mode block is singular (constants); a diagonal
                # penalty works only at a node where the left null vector is
                # nonzero, so find one numerically
                ns = scipy.linalg.null_space(A[0].T, rcond=1e-10)
                self._nulls[kind] = ns
                used = []
                for c in range(ns.shape[1]):
                    for p in np.argsort(-np.abs(ns[:, c])):
                        if p not in used:
                            break
                    used.append(int(p))
                    A[0, p, p] += 1.0 / self.dr**2
                inv = np.linalg.inv(A)
                self._factors[kind] = ("dense", np.ascontiguousarray(np.swapaxes(inv, -1, -2)))
        return self._factors[kind]

    def null_left(self, kind: str) -> np.ndarray:
        """Orthonormal left-null basis of the mean-mode block, shape (nz, d)."""
        self.factors(kind)
        return self._nulls[kind]


def _dense_apply(tableT: np.ndarray, spec: np.ndarray) -> np.ndarray:
    """Apply per-mode dense inverses to spectra shaped (..., nz, ny, nxr)."""
    lead = spec.shape[:-3]
    nz = spec.shape[-3]
    K = spec.shape[-2] * spec.shape[-1]
    Y = np.moveaxis(spec.reshape(lead + (nz, K)), -1, 0).reshape(K, -1, nz)
    Zr = np.matmul(np.ascontiguousarray(Y.real), tableT)
    Zi = np.matmul(np.ascontiguousarray(Y.imag), tableT)
    Z = Zr + 1j * Zi
    Z = np.moveaxis(Z.reshape((K,) + lead + (nz,)), 0, -1)
    return Z.reshape(lead + (nz,) + spec.shape[-2:])


# ---------------------------------------------------------------------------
# per-side solver


def mapped_grid(interface: Interface, side: int, nz: int) -> MappedGrid3D:
    cache = interface.__dict__.setdefault("_mapped_grids", {})
    key = (side, nz)
    if key not in cache:
        cache[key] = MappedGrid3D(interface, side, nz)
    return cache[key]


def elliptic_side(interface: Interface, side: int, nz: int) -> "EllipticSide":
    cache = interface.__dict__.setdefault("_elliptic_sides", {})
    key = (side, nz)
    if key not in cache:
        cache[key] = EllipticSide(mapped_grid(interface, side, nz))
    return cache[key]


class EllipticSide:
    """Solver context bound to one mapped strip."""

    def __init__(self, grid3: MappedGrid3D):
        self.g3 = grid3
        self.g2 = grid3.grid
        self.tables = FlatTables.get(self.g2, grid3.nz)

    # -- operator applications (batch-safe over leading axes) --------------
    def apply_compact(self, u: np.ndarray) -> np.ndarray:
        """Expanded mapped Laplacian, interior rows only are meaningful."""
        g2, g3 = self.g2, self.g3
        U = rfft2(u)
        shape = (g2.ny, g2.nx)
        lap_y = irfft2(-g2.rksq * U, shape)
        t1 = irfft2(g2.rK1_deriv * U, shape)
        t2 = irfft2(g2.rK2_deriv * U, shape)
        du = _deriv_r4(u, g3.dr)
        d2u = _deriv_rr4(u, g3.dr)
        return (
            lap_y
            + g3.lap_A * d2u
            + g3.lap_b * du
            - 2.0 * g3.a1 * _deriv_r4(t1, g3.dr)
            - 2.0 * g3.a2 * _deriv_r4(t2, g3.dr)
        )

    def apply_composed(self, u: np.ndarray) -> np.ndarray:
        return self.g3.div(*self.g3.grad(u))

    def _head_conormal(self, u: np.ndarray) -> np.ndarray:
        """N . grad u at r = 0 with the 3-point vertical stencil."""
        g3 = self.g3
        f1, f2 = g3.interface.gradf
        du0 = (-3.0 * u[..., 0, :, :] + 4.0 * u[..., 1, :, :] - u[..., 2, :, :]) / (2.0 * g3.dr)
        u0 = u[..., 0, :, :]
        dy1 = geo.deriv_values(u0, self.g2, 1)
        dy2 = geo.deriv_values(u0, self.g2, 2)
        S = g3.interface.metric_S
        return -f1 * dy1 - f2 * dy2 + (S / g3.phi_r) * du0

    def _tail_dr3(self, u: np.ndarray) -> np.ndarray:
        return (3.0 * u[..., -1, :, :] - 4.0 * u[..., -2, :, :] + u[..., -3, :, :]) / (
            2.0 * self.g3.dr
        )

    def _tail_dr5(self, u: np.ndarray) -> np.ndarray:
        return (
            25.0 * u[..., -1, :, :]
            - 48.0 * u[..., -2, :, :]
            + 36.0 * u[..., -3, :, :]
            - 16.0 * u[..., -4, :, :]
            + 3.0 * u[..., -5, :, :]
        ) / (12.0 * self.g3.dr)

    def _apply_stacked(self, kind: str, u: np.ndarray) -> np.ndarray:
        if kind in ("ext", "dd"):
            out = self.apply_compact(u)
            out[..., 0, :, :] = u[..., 0, :, :]
            if kind == "ext":
                out[..., -1, :, :] = self._tail_dr5(u)
            else:
                out[..., -1, :, :] = u[..., -1, :, :]
        elif kind == "dc":
            out = self.apply_composed(u)
            out[..., 0, :, :] = self._head_conormal(u)
            out[..., -1, :, :] = self._tail_dr3(u)
        else:
            raise ValueError(f"unknown kind {kind!r}")
        return out

    def _precond(self, kind: str, res: np.ndarray) -> np.ndarray:
        r = res
        if kind == "dc" and self.g3.side < 0:
            # flat conormal row is side * d/dr; fold the sign into the data
            r = res.copy()
            r[..., 0, :, :] = -r[..., 0, :, :]
        spec = rfft2(r)
        style, table = self.tables.factors(kind)
        if style == "banded":
            x = solve_banded_factored(table, spec)
        else:
            x = _dense_apply(table, spec)
        return irfft2(x, (self.g2.ny, self.g2.nx))

    # -- stacked right-hand sides ------------------------------------------
    def _assemble(self, kind, rhs, bc0, bcw):
        if rhs is None:
            stacked = np.zeros(self.g3.shape)
        else:
            stacked = np.array(rhs, dtype=float, copy=True)
        if kind != "proj":
            z = np.zeros((self.g2.ny, self.g2.nx))
            stacked[..., 0, :, :] = z if bc0 is None else _as_values2(bc0, self.g2)
            stacked[..., -1, :, :] = z if bcw is None else _as_values2(bcw, self.g2)
        return stacked

    def solve(
        self,
        kind: str,
        rhs=None,
        bc0=None,
        bcw=None,
        tol: float = 1e-11,
        maxiter: int = 60,
        stall_accept: float = None,
        scale: float = 0.0,
    ):
        """Richardson iteration with the factored flat inverse; GMRES fallback.

        Returns (solution, info).  On a flat interface the first iterate is
        already exact, so the loop exits immediately.

        The composed kind has a one-dimensional left null space on the mean
        mode (the discrete divergence-theorem constraint), so data that is
        only approximately consistent leaves an irreducible residual floor;
        the iteration stalls there.  Floors below stall_accept are returned
        with the honest residual in info; worse stalls get one GMRES attempt
        (which finds the least-squares optimum) before SolverDiverged.

        scale, when given, floors the residual normalization: callers whose
        assembled data can cancel to roundoff (a wall drift exactly carrying
        the interface trace) pass the ambient field scale so convergence is
        judged in absolute terms instead of against noise.
        """
        stacked = self._assemble(kind, rhs, bc0, bcw)
        info = {"method": "richardson", "iterations": 0}
        bnorm = max(float(np.max(_rms_last3(stacked))), float(scale), 1e-300)
        x = self._precond(kind, stacked)
        best = np.inf
        strikes = 0
        for it in range(1, maxiter + 1):
            res = stacked - self._apply_stacked(kind, x)
            rn = float(np.max(_rms_last3(res))) / bnorm
            info["iterations"] = it
            info["residual"] = rn
            if not np.isfinite(rn):
                raise SolverDiverged(f"{kind} solve produced non-finite residual", residual=rn)
            if rn < tol:
                break
            strikes = strikes + 1 if rn > 0.9 * best else 0
            if strikes >= 3 or it == maxiter:
                # no further progress: a stall below stall_accept is a known
                # data-induced floor and is returned with the honest residual;
                # a stall within 50x of target is the roundoff floor of the
                # banded solve (GMRES cannot beat it either, at great cost);
                # anything worse gets one GMRES attempt before giving up
                if stall_accept is not None and rn < stall_accept:
                    info["stalled"] = True
                    break
                if rn < tol * 50.0:
                    info["stalled"] = True
                    break
                x = self._gmres(kind, stacked, x, tol * bnorm, info)
                res = stacked - self._apply_stacked(kind, x)
                rn = float(np.max(_rms_last3(res))) / bnorm
                info["residual"] = rn
                if rn >= max(tol * 50.0, stall_accept if stall_accept is not None else 0.0):
                    raise SolverDiverged(
                        f"{kind} solve stalled at relative residual {rn:.3e}",
                        residual=rn,
                        target=tol,
                    )
                break
            best = min(best, rn)
            x = x + self._precond(kind, res)
        if kind in FlatTables.PINNED:
            x = x - np.mean(x, axis=(-3, -2, -1), keepdims=True)
        return x, info

    def _gmres(self, kind, stacked, x0, atol_rms, info):
        info["method"] = "gmres"
        shape = stacked.shape
        n = stacked.size
        if stacked.ndim != 3:
            # batched systems fall back one element at a time
            out = np.empty_like(stacked)
            flat_in = stacked.reshape((-1,) + shape[-3:])
            flat_x0 = x0.reshape((-1,) + shape[-3:])
            for b in range(flat_in.shape[0]):
                out.reshape((-1,) + shape[-3:])[b] = self._gmres(
                    kind, flat_in[b], flat_x0[b], atol_rms, dict(info)
                )
            return out

        def mv(v):
            return self._apply_stacked(kind, v.reshape(shape)).ravel()

        def pc(v):
            return self._precond(kind, v.reshape(shape)).ravel()

        A = spla.LinearOperator((n, n), matvec=mv)
        M = spla.LinearOperator((n, n), matvec=pc)
        sol, _ = spla.gmres(
            A,
            stacked.ravel(),
            x0=x0.ravel(),
            M=M,
            rtol=0.0,
            atol=atol_rms * np.sqrt(n),
            restart=30,
            maxiter=40,
        )
        return sol.reshape(shape)

    # -- convenience wrappers ---------------------------------------------
    def solve_laplace_dirichlet(self, g_interface, g_wall) -> np.ndarray:
        x, _ = self.solve("dd", None, bc0=g_interface, bcw=g_wall)
        return x


# ---------------------------------------------------------------------------
# public solves


def harmonic_extension(
    interface: Interface, side: int, g, nz: int, tol: float = 1e-11
) -> StripField3D:
    """Harmonic extension of interface data g into the side strip.

    Dirichlet data on the interface, homogeneous Neumann on the wall; on a
    flat interface the per-mode profile is cosh(|xi| (1 - x3 side)) scaled to
    match g.
    """
    es = elliptic_side(interface, side, nz)
    x, info = es.solve("ext", None, bc0=g, bcw=None, tol=tol)
    out = StripField3D(es.g3, x)
    out.solver_info = info
    return out


def laplacian_residual(field: StripField3D, rhs: np.ndarray = None) -> float:
    """Relative RMS of the compact mapped Laplacian on interior rows."""
    es = EllipticSide(field.grid3)
    lap = es.apply_compact(field.values)[1:-1]
    if rhs is not None:
        lap = lap - np.asarray(rhs)[1:-1]
    return rms(lap) / max(rms(field.values), 1e-300)


def solve_pressure_quadratic(
    v: VectorField3D, w: VectorField3D = None, tol: float = 1e-11
) -> StripField3D:
    """Pressure-type solve: Lap p = -tr(grad v grad w), p = 0 on the
    interface, d3 p = 0 on the wall."""
    g3 = v.grid3
    Dv = [g3.grad(c) for c in v.comps]  # Dv[j][i] = d_i v_j (i 0-based)
    Dw = Dv if (w is None or w is v) else [g3.grad(c) for c in w.comps]
    acc = np.zeros(g3.shape)
    for i in range(3):
        for j in range(3):
            acc += Dv[j][i] * Dw[i][j]
    rhs = -dealias3(acc, g3.grid)
    es = EllipticSide(g3) if not hasattr(g3.interface, "_elliptic_sides") else elliptic_side(
        g3.interface, g3.side, g3.nz
    )
    x, info = es.solve("ext", rhs, bc0=None, bcw=None, tol=tol)
    out = StripField3D(g3, x)
    out.solver_info = info
    out.rhs = rhs
    return out


def antideriv_from_wall(w: np.ndarray, dr: float) -> np.ndarray:
    """Discrete vertical antiderivative I with D_r I = w and I = 0 at the wall.

    The centered-difference recurrence is satisfied exactly at every interior
    row and at the one-sided wall row; the defect of the one-sided row at
    r = 0 is the price and is reported by the callers that care.
    """
    nz = w.shape[-3]
    I = np.zeros_like(w)
    for j in range(nz - 2, 0, -2):
        I[..., j - 1, :, :] = I[..., j + 1, :, :] - 2.0 * dr * w[..., j, :, :]
    I[..., nz - 2, :, :] = (I[..., nz - 3, :, :] - 2.0 * dr * w[..., nz - 1, :, :]) / 4.0
    for j in range(nz - 3, 0, -2):
        I[..., j - 1, :, :] = I[..., j + 1, :, :] - 2.0 * dr * w[..., j, :, :]
    return I


def project_div_free(F: VectorField3D, tol: float = 1e-10) -> VectorField3D:
    """Remove the gradient part so the result is discretely divergence-free.

    A gauge potential solves the composed Laplacian against div F with
    homogeneous conormal data, so the normal trace on the interface is
    preserved up to the solver tolerance; whatever divergence the solve
    leaves (its own floor plus the boundary rows it does not control) is
    absorbed into a vertical antiderivative correction of the third
    component, leaving a pure solver residual everywhere but the first row.
    Idempotent at that same floor.
    """
    g3 = F.grid3
    es = elliptic_side(g3.interface, g3.side, g3.nz)
    rho = F.div()
    fscale = max(F.rms(), 1e-300)
    if rms(rho) <= 1e-12 * fscale:
        out = VectorField3D(g3, F.comps)
        out.report = {"div_res": rms(rho) / fscale, "solver": {"method": "skip"}}
        return out
    # any stall floor here is harmless: the absorber below removes whatever
    # divergence the potential could not, so the final field is exact anyway
    phi, info = es.solve("dc", rho, tol=tol, stall_accept=np.inf)
    G = g3.grad(phi)
    comps = [F.comps[i] - G[i] for i in range(3)]
    resid = g3.div(*comps)
    Z3 = antideriv_from_wall(g3.phi_r[None] * resid, g3.dr)
    comps[2] = comps[2] - Z3
    out = VectorField3D(g3, comps)
    final = g3.div(*out.comps)
    out.report = {
        "div_res": rms(final) / max(rms(F.comps[0]) + rms(F.comps[1]) + rms(F.comps[2]), 1e-300),
        "solver": info,
    }
    return out


def check_compatibility(
    omega: VectorField3D, gdiv, theta, means=(0.0, 0.0)
) -> CompatReport:
    """Relative defects of the three div-curl solvability constraints.

    The solenoidality of the curl data is measured away from the first row:
    the vertical antiderivatives underlying the reconstruction are exact on
    the interior and wall rows only, and the projection that prepares curl
    data parks its own one-sided defect in that same first row.
    """
    g3 = omega.grid3
    g2 = g3.grid
    th = _as_values2(theta, g2)
    gv = None if gdiv is None else np.asarray(gdiv, dtype=float)
    scale = max(
        omega.rms(),
        0.0 if gv is None else rms(gv),
        rms(th),
        abs(means[0]),
        abs(means[1]),
        1e-300,
    )
    c1 = rms(omega.div()[..., 1:, :, :]) / scale
    c2 = abs(float(np.mean(omega.comps[2][-1]))) / scale
    vol = 0.0
    if gv is not None:
        wgt = np.abs(g3.phi_r)[None]
        vol = float(np.trapezoid(np.mean(gv * wgt, axis=(1, 2)), dx=g3.dr))
    c3 = abs(vol + g3.side * float(np.mean(th))) / scale
    return CompatReport(c1=c1, c2=c2, c3=c3, scale=scale)


def solve_div_curl(
    omega: VectorField3D,
    gdiv,
    theta,
    means=(0.0, 0.0),
    tol: float = 1e-10,
    compat_tol: float = 1e-8,
    polish="auto",
    polish_target: float = 1e-8,
    stall_accept: float = 1e-5,
) -> tuple:
    """Reconstruct u with curl u = omega, div u = g, u.N = theta on the
    interface, u3 = 0 and prescribed horizontal means on the wall.

    The curl part is built from exact vertical antiderivatives plus a wall
    stream function, the remaining divergence and traces are fixed by one
    conormal-Neumann solve of the composed Laplacian, and the wall means are
    met exactly by constants.  polish=True (or 'auto' on small consistent
    systems that miss polish_target) refines the full first-order system by
    LSMR.
    """
    g3 = omega.grid3
    g2 = g3.grid
    compat = check_compatibility(omega, gdiv, theta, means)
    for name, val in (("C1", compat.c1), ("C2", compat.c2), ("C3", compat.c3)):
        if val > compat_tol:
            raise CompatibilityViolated(name, val * compat.scale, compat_tol * compat.scale)

    th = _as_values2(theta, g2)
    scale = compat.scale

    # homotopy part: v1, v2 from vertical antiderivatives of the curl data
    pr = g3.phi_r[None]
    v1 = antideriv_from_wall(pr * omega.comps[1], g3.dr)
    v2 = -antideriv_from_wall(pr * omega.comps[0], g3.dr)
    v3 = np.zeros(g3.shape)

    # wall stream function closes the vertical curl component
    w3 = omega.comps[2][-1]
    w3hat = np.fft.fft2(w3) / (g2.ny * g2.nx)
    w3hat[0, 0] = 0.0
    ksq = np.where(g2.ksq > 0, g2.ksq, 1.0)
    eta_hat = -w3hat / ksq
    eta = FourierField2D.from_coeffs(g2, eta_hat)
    c1 = -eta.deriv(2).values
    c2 = eta.deriv(1).values
    v1 = v1 + c1[None] + means[0]
    v2 = v2 + c2[None] + means[1]

    # divergence / trace correction
    vdiv = g3.div(v1, v2, v3)
    rhs = (-vdiv) if gdiv is None else (np.asarray(gdiv, dtype=float) - vdiv)
    bc0 = th - g3.normal_trace(v1, v2, v3)
    es = elliptic_side(g3.interface, g3.side, g3.nz)
    phi, info = es.solve("dc", rhs, bc0=bc0, bcw=None, tol=tol,
                         stall_accept=stall_accept, scale=scale)
    G = g3.grad(phi)
    u = VectorField3D(g3, (v1 + G[0], v2 + G[1], v3 + G[2]))

    report = _div_curl_report(u, omega, gdiv, th, means, compat, scale, info)
    do_polish = polish is True or (
        polish == "auto"
        and report.max_rel() > polish_target
        and np.prod(g3.shape) <= 1.5e5
    )
    if do_polish:
        u = _polish_div_curl(u, omega, gdiv, th, means)
        report = _div_curl_report(u, omega, gdiv, th, means, compat, scale, info)
        report.polished = True
    return u, report


def _div_curl_report(u, omega, gdiv, th, means, compat, scale, info) -> DivCurlReport:
    g3 = u.grid3
    cu = u.curl()
    curl_res = float(
        np.sqrt(np.mean([np.mean((cu.comps[i] - omega.comps[i]) ** 2) for i in range(3)]))
    )
    dv = u.div()
    if gdiv is not None:
        dv = dv - np.asarray(gdiv)
    div_res = rms(dv)
    trace_res = rms(u.normal_trace() - th)
    wall_res = rms(u.comps[2][-1])
    mean_defect = max(
        abs(float(np.mean(u.comps[0][-1])) - means[0]),
        abs(float(np.mean(u.comps[1][-1])) - means[1]),
    )
    return DivCurlReport(
        curl_res=curl_res / scale,
        div_res=div_res / scale,
        trace_res=trace_res / scale,
        wall_res=wall_res / scale,
        mean_defect=mean_defect / scale,
        compat=compat,
        scale=scale,
        solver=dict(info),
    )


# ---------------------------------------------------------------------------
# least-squares polish of the first-order system


class _DivCurlSystem:
    """Stacked first-order operator for LSMR refinement."""

    def __init__(self, g3: MappedGrid3D):
        self.g3 = g3
        g2 = g3.grid
        self.g2 = g2
        self.N = int(np.prod(g3.shape))
        self.M2 = g2.ny * g2.nx
        self.wt = np.sqrt(float(g3.nz))
        self.wm = np.sqrt(float(self.N))
        self.rows = 4 * self.N + 2 * self.M2 + 2
        eye = np.eye(g3.nz)[:, :, None, None]
        self.D1T = deriv_r(eye, g3.dr)[:, :, 0, 0]  # transpose of D1

    def _dT(self, i: int, h: np.ndarray) -> np.ndarray:
        """Adjoint of the mapped partial d_i under the plain grid inner product."""
        g3 = self.g3
        if i == 3:
            return np.tensordot(self.D1T, g3.cvert[None] * h, axes=(1, 0))
        a = g3.a1 if i == 1 else g3.a2
        return -geo.deriv_values(h, self.g2, i) - np.tensordot(self.D1T, a * h, axes=(1, 0))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        g3 = self.g3
        d1, d2, d3 = (c.reshape(g3.shape) for c in np.split(x, 3))
        cu = g3.curl(d1, d2, d3)
        dv = g3.div(d1, d2, d3)
        tr = self.wt * g3.normal_trace(d1, d2, d3)
        wall = self.wt * d3[-1]
        m1 = self.wm * np.mean(d1[-1])
        m2 = self.wm * np.mean(d2[-1])
        return np.concatenate(
            [cu[0].ravel(), cu[1].ravel(), cu[2].ravel(), dv.ravel(), tr.ravel(), wall.ravel(), [m1, m2]]
        )

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        g3 = self.g3
        N, M2 = self.N, self.M2
        G1 = y[0:N].reshape(g3.shape)
        G2 = y[N : 2 * N].reshape(g3.shape)
        G3 = y[2 * N : 3 * N].reshape(g3.shape)
        h = y[3 * N : 4 * N].reshape(g3.shape)
        tr = y[4 * N : 4 * N + M2].reshape((g3.grid.ny, g3.grid.nx))
        wall = y[4 * N + M2 : 4 * N + 2 * M2].reshape((g3.grid.ny, g3.grid.nx))
        m1, m2 = y[-2], y[-1]
        d1 = self._dT(3, G2) - self._dT(2, G3) + self._dT(1, h)
        d2 = self._dT(1, G3) - self._dT(3, G1) + self._dT(2, h)
        d3 = self._dT(2, G1) - self._dT(1, G2) + self._dT(3, h)
        f1, f2 = g3.interface.gradf
        d1[0] += self.wt * (-f1 * tr)
        d2[0] += self.wt * (-f2 * tr)
        d3[0] += self.wt * tr
        d3[-1] += self.wt * wall
        d1[-1] += self.wm * m1 / M2
        d2[-1] += self.wm * m2 / M2
        return np.concatenate([d1.ravel(), d2.ravel(), d3.ravel()])


def _polish_div_curl(u, omega, gdiv, th, means):
    g3 = u.grid3
    sys = _DivCurlSystem(g3)
    cu = u.curl()
    dv = u.div()
    if gdiv is not None:
        dv = dv - np.asarray(gdiv)
    b = np.concatenate(
        [
            (omega.comps[0] - cu.comps[0]).ravel(),
            (omega.comps[1] - cu.comps[1]).ravel(),
            (omega.comps[2] - cu.comps[2]).ravel(),
            (-dv).ravel(),
            (sys.wt * (th - g3.normal_trace(*u.comps))).ravel(),
            (sys.wt * (-u.comps[2][-1])).ravel(),
            [
                sys.wm * (means[0] - float(np.mean(u.comps[0][-1]))),
                sys.wm * (means[1] - float(np.mean(u.comps[1][-1]))),
            ],
        ]
    )
    A = spla.LinearOperator(
        (sys.rows, 3 * sys.N), matvec=sys.matvec, rmatvec=sys.rmatvec, dtype=float
    )
    sol = spla.lsmr(A, b, atol=1e-13, btol=1e-13, maxiter=2000)[0]
    d1, d2, d3 = (c.reshape(g3.shape) for c in np.split(sol, 3))
    return VectorField3D(g3, (u.comps[0] + d1, u.comps[1] + d2, u.comps[2] + d3))
