"""State types and time-derivative assembly for the two-phase interface flow.

The evolving state splits into a surface part (the graph f and the scaled
normal velocity theta = u.N on the interface) and a bulk part per phase:
velocity, magnetic field, their curls, and the wall-averaged tangential
drift constants.  One right-hand-side evaluation runs the full elliptic
pipeline: divergence-free projection of the curl data, div-curl
reconstruction of u and h, quadratic pressure solves, and the nonlocal
corrections of the theta equation behind a single two-phase DN inversion.

Bulk arrays live on the stretch-mapped strips of the current interface, so
time stepping at fixed (r, x') sees the grid move vertically; the extra
advection this induces is added by full_rhs, not by the pointwise transport
terms.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .dn import dn_apply, dn_tilde_inverse
from .elliptic import (
    VectorField3D,
    StripField3D,
    dealias3,
    harmonic_extension,
    mapped_grid,
    project_div_free,
    solve_div_curl,
    solve_pressure_quadratic,
)
from .geometry import Interface, deriv_r
from .spectral import FourierField2D, dealias

log = logging.getLogger(__name__)

VARIANTS = ("two-fluid-equal", "two-fluid-general", "one-fluid")


def mean_free(u: FourierField2D) -> FourierField2D:
    """Kill the (0, 0) coefficient; the projection written P throughout."""
    c = u.coeffs.copy()
    c[0, 0] = 0.0
    return FourierField2D.from_coeffs(u.grid, c)


# ---------------------------------------------------------------------------
# state containers


@dataclass(frozen=True)
class PhysParams:
    """Physical constants and the flavor of the model being run.

    variant selects which phases carry dynamics: both with unit densities,
    both with general densities, or a single lower phase under vacuum (the
    plus-side fields are then ignored and rho_plus is inert).
    """

    sigma: float = 0.0
    rho_plus: float = 1.0
    rho_minus: float = 1.0
    variant: str = "two-fluid-equal"
    c0: float = 0.1
    s: float = 6.0

    def __post_init__(self):
        if self.sigma < 0.0:
            raise ValueError(f"sigma={self.sigma} must be >= 0")
        if self.rho_plus <= 0.0 or self.rho_minus <= 0.0:
            raise ValueError("densities must be positive")
        if not 0.0 < self.c0 < 0.5:
            raise ValueError(f"c0={self.c0} outside (0, 1/2)")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "two-fluid-equal" and not (
            self.rho_plus == self.rho_minus == 1.0
        ):
            raise ValueError("two-fluid-equal means unit densities; "
                             "use two-fluid-general otherwise")

    @property
    def rho_sum(self) -> float:
        return self.rho_plus + self.rho_minus

    def rho(self, side: int) -> float:
        return self.rho_plus if side > 0 else self.rho_minus

    @property
    def sides(self) -> tuple:
        return (-1,) if self.variant == "one-fluid" else (1, -1)


@dataclass
class SurfaceState:
    f: Interface
    theta: FourierField2D

    def __post_init__(self):
        if self.theta.grid is not self.f.grid:
            raise ValueError("f and theta must share one grid")

    @property
    def grid(self):
        return self.f.grid

    def p_theta(self) -> FourierField2D:
        """Mean-free part of theta; the actual normal speed of the graph."""
        return mean_free(self.theta)


@dataclass
class BulkState:
    """Per-phase volume fields plus the wall-average constants.

    The curl fields are stored alongside u and h because they are the
    prognostic variables; after recovery curl u = omega and curl h = j hold
    to solver tolerance.  a and b are the prescribed horizontal means of u
    and h on the walls.
    """

    u_plus: VectorField3D
    u_minus: VectorField3D
    h_plus: VectorField3D
    h_minus: VectorField3D
    omega_plus: VectorField3D
    omega_minus: VectorField3D
    j_plus: VectorField3D
    j_minus: VectorField3D
    a_plus: tuple = (0.0, 0.0)
    a_minus: tuple = (0.0, 0.0)
    b_plus: tuple = (0.0, 0.0)
    b_minus: tuple = (0.0, 0.0)
    reports: dict = field(default_factory=dict)

    def u(self, side: int) -> VectorField3D:
        return self.u_plus if side > 0 else self.u_minus

    def h(self, side: int) -> VectorField3D:
        return self.h_plus if side > 0 else self.h_minus

    def omega(self, side: int) -> VectorField3D:
        return self.omega_plus if side > 0 else self.omega_minus

    def j(self, side: int) -> VectorField3D:
        return self.j_plus if side > 0 else self.j_minus

    def a(self, side: int) -> tuple:
        return self.a_plus if side > 0 else self.a_minus

    def b(self, side: int) -> tuple:
        return self.b_plus if side > 0 else self.b_minus

    @property
    def nz(self) -> int:
        return self.u_minus.grid3.nz


@dataclass
class StateDerivative:
    df: FourierField2D
    dtheta: FourierField2D
    domega_plus: VectorField3D
    domega_minus: VectorField3D
    dj_plus: VectorField3D
    dj_minus: VectorField3D
    da_plus: tuple = (0.0, 0.0)
    da_minus: tuple = (0.0, 0.0)
    db_plus: tuple = (0.0, 0.0)
    db_minus: tuple = (0.0, 0.0)


# ---------------------------------------------------------------------------
# constructors


def quiescent_bulk(interface: Interface, nz: int = 65) -> BulkState:
    """All-zero bulk fields on both strips of the given interface."""
    gp = mapped_grid(interface, +1, nz)
    gm = mapped_grid(interface, -1, nz)
    return BulkState(
        u_plus=VectorField3D.zeros(gp), u_minus=VectorField3D.zeros(gm),
        h_plus=VectorField3D.zeros(gp), h_minus=VectorField3D.zeros(gm),
        omega_plus=VectorField3D.zeros(gp), omega_minus=VectorField3D.zeros(gm),
        j_plus=VectorField3D.zeros(gp), j_minus=VectorField3D.zeros(gm),
    )


def uniform_bulk(interface: Interface, nz: int = 65,
                 u_plus=(0.0, 0.0), u_minus=(0.0, 0.0),
                 h_plus=(0.0, 0.0), h_minus=(0.0, 0.0)) -> BulkState:
    """Constant tangential fields with matching wall means.

    This is an exact curl-free, divergence-free state only over a flat
    interface (a constant horizontal field has nonzero normal trace under a
    tilted graph); recover_bulk is the general-purpose constructor.
    """
    def _const(g3, pair):
        c1 = np.full(g3.shape, float(pair[0]))
        c2 = np.full(g3.shape, float(pair[1]))
        return VectorField3D(g3, (c1, c2, np.zeros(g3.shape)))

    gp = mapped_grid(interface, +1, nz)
    gm = mapped_grid(interface, -1, nz)
    return BulkState(
        u_plus=_const(gp, u_plus), u_minus=_const(gm, u_minus),
        h_plus=_const(gp, h_plus), h_minus=_const(gm, h_minus),
        omega_plus=VectorField3D.zeros(gp), omega_minus=VectorField3D.zeros(gm),
        j_plus=VectorField3D.zeros(gp), j_minus=VectorField3D.zeros(gm),
        a_plus=tuple(u_plus), a_minus=tuple(u_minus),
        b_plus=tuple(h_plus), b_minus=tuple(h_minus),
    )


def _as_vector(x, g3) -> VectorField3D:
    if x is None:
        return VectorField3D.zeros(g3)
    if isinstance(x, VectorField3D):
        if x.grid3 is g3:
            return x
        return VectorField3D(g3, x.comps)
    return VectorField3D(g3, tuple(x))


def recover_bulk(surface: SurfaceState,
                 omega_plus=None, omega_minus=None, j_plus=None, j_minus=None,
                 a_plus=(0.0, 0.0), a_minus=(0.0, 0.0),
                 b_plus=(0.0, 0.0), b_minus=(0.0, 0.0),
                 nz: int = 65, tol: float = 1e-10, compat_tol: float = 1e-8,
                 polish=False, sides=(1, -1)) -> BulkState:
    """Rebuild (u, h) on the strips from curl data, traces, and wall means.

    The curl inputs are first projected divergence-free, then each field is
    reconstructed by a div-curl solve: u matches the interface trace
    u.N = P theta and the wall means a; h is tangent to the interface
    (h.N = 0) with wall means b.  Walls are impermeable for both.  Sides not
    listed come back as zero fields (the vacuum phase of the one-fluid
    variant).

    polish defaults off: traces and wall means are already near-exact
    without it, and the divergence left by the correction solve is an
    operator-mismatch floor proportional to field size that the refinement
    buys down only slowly.  Pass polish="auto" or True to enable it.

    Raises CompatibilityViolated / SolverDiverged from the solves.
    """
    f = surface.f
    pth = surface.p_theta()
    tmean = surface.theta.mean()
    if tmean != 0.0:
        log.debug("recover_bulk: projecting away theta mean %.3e", tmean)

    curls = {+1: (omega_plus, j_plus), -1: (omega_minus, j_minus)}
    means = {+1: (a_plus, b_plus), -1: (a_minus, b_minus)}
    fields = {}
    reports = {}
    for side in (+1, -1):
        g3 = mapped_grid(f, side, nz)
        if side not in sides:
            z = VectorField3D.zeros(g3)
            fields[side] = (z, z, z, z)
            continue
        om = _as_vector(curls[side][0], g3)
        jc = _as_vector(curls[side][1], g3)
        a, b = means[side]
        omp = project_div_free(om, tol=tol)
        u, urep = solve_div_curl(omp, None, pth.values, means=tuple(a),
                                 tol=tol, compat_tol=compat_tol, polish=polish)
        jp = project_div_free(jc, tol=tol)
        h, hrep = solve_div_curl(jp, None, None, means=tuple(b),
                                 tol=tol, compat_tol=compat_tol, polish=polish)
        fields[side] = (u, h, omp, jp)
        tag = "+" if side > 0 else "-"
        reports["u" + tag] = urep
        reports["h" + tag] = hrep

    return BulkState(
        u_plus=fields[+1][0], u_minus=fields[-1][0],
        h_plus=fields[+1][1], h_minus=fields[-1][1],
        omega_plus=fields[+1][2], omega_minus=fields[-1][2],
        j_plus=fields[+1][3], j_minus=fields[-1][3],
        a_plus=tuple(a_plus), a_minus=tuple(a_minus),
        b_plus=tuple(b_plus), b_minus=tuple(b_minus),
        reports=reports,
    )


# ---------------------------------------------------------------------------
# surface sources


def _interface_traces(F: VectorField3D) -> tuple:
    return (F.comps[0][0], F.comps[1][0], F.comps[2][0])


def _quadform(interface: Interface, c11, c12, c22) -> np.ndarray:
    """sum_ij c_ij d_i d_j f with the full double sum (c12 counted twice)."""
    f11, f12, f22 = interface.hessf
    return c11 * f11 + 2.0 * c12 * f12 + c22 * f22


def quadratic_pressures(bulk: BulkState, params: PhysParams = None,
                        tol: float = 1e-11) -> dict:
    """Zero-trace pressures of the quadratic sources (u, u) and (h, h).

    Returns {side: (p_uu, p_hh)}; these feed both the surface sources g and
    the pressure-trace groups of the theta equation, so one evaluation is
    shared across the assembly.
    """
    sides = (1, -1) if params is None else params.sides
    out = {}
    for side in sides:
        out[side] = (
            solve_pressure_quadratic(bulk.u(side), tol=tol),
            solve_pressure_quadratic(bulk.h(side), tol=tol),
        )
    return out


def compute_g_pm(surface: SurfaceState, bulk: BulkState, params: PhysParams,
                 pressures: dict = None, tol: float = 1e-11) -> tuple:
    """Surface source pair (g+, g-) built from interface-layer traces.

    g = 2 (u1 d1 theta + u2 d2 theta)
        + N . grad(p_uu - p_hh / rho) on the interface
        + sum_ij (u_i u_j - h_i h_j / rho) d_i d_j f.
    """
    if pressures is None:
        pressures = quadratic_pressures(bulk, params, tol=tol)
    g2 = surface.grid
    th = surface.theta
    d1t = th.deriv(1).values
    d2t = th.deriv(2).values
    out = {}
    for side in params.sides:
        rho = params.rho(side)
        u1, u2, _ = _interface_traces(bulk.u(side))
        h1, h2, _ = _interface_traces(bulk.h(side))
        pu, ph = pressures[side]
        g3 = bulk.u(side).grid3
        ptr = g3.normal_dot_trace_gradient(pu.values - ph.values / rho)
        vals = (
            2.0 * (u1 * d1t + u2 * d2t)
            + ptr
            + _quadform(surface.f, u1 * u1 - h1 * h1 / rho,
                        u1 * u2 - h1 * h2 / rho, u2 * u2 - h2 * h2 / rho)
        )
        out[side] = dealias(FourierField2D.from_values(g2, vals))
    if -1 not in out:
        out[-1] = FourierField2D.zeros(g2)
    if +1 not in out:
        out[+1] = FourierField2D.zeros(g2)
    return out[+1], out[-1]


def theta_rhs(surface: SurfaceState, bulk: BulkState, params: PhysParams,
              pressures: dict = None, tol: float = 1e-9,
              dn_tol: float = 1e-11) -> FourierField2D:
    """Assemble d theta / dt on the surface grid.

    Two-fluid groups, in assembly order: capillary (rho+ N+ + rho- N-)H(f)
    with weight sigma / (rho+ + rho-)^2; density-weighted advection of
    theta; the quadratic curvature coupling; the pressure-trace sum; and
    the nonlocal corrections (N+ - N-) Ntilde^{-1} P applied to the
    combined capillary / advection-jump / quadratic-jump / pressure-jump
    argument.  The four correction arguments share one inversion, which is
    exact by linearity.  The one-fluid variant keeps the single-sided
    capillary, advection, pressure trace, and quadratic terms, with no
    nonlocal correction.
    """
    g2 = surface.grid
    f = surface.f
    nz = bulk.nz
    if pressures is None:
        pressures = quadratic_pressures(bulk, params, tol=dn_tol)
    th = surface.theta
    d1t = th.deriv(1).values
    d2t = th.deriv(2).values
    sigma = params.sigma

    if params.variant == "one-fluid":
        rho = params.rho_minus
        u1, u2, _ = _interface_traces(bulk.u(-1))
        h1, h2, _ = _interface_traces(bulk.h(-1))
        out = -2.0 * (u1 * d1t + u2 * d2t)
        if sigma > 0.0:
            Hf = geo.mean_curvature(f).values
            out = out + (sigma / rho) * dn_apply(f, -1, Hf, nz, tol=dn_tol)
        pu, ph = pressures[-1]
        g3m = bulk.u(-1).grid3
        out = out - g3m.normal_dot_trace_gradient(rho * pu.values - ph.values) / rho
        out = out - _quadform(f, u1 * u1 - h1 * h1 / rho,
                              u1 * u2 - h1 * h2 / rho, u2 * u2 - h2 * h2 / rho)
        return dealias(FourierField2D.from_values(g2, out))

    rp, rm = params.rho_plus, params.rho_minus
    rsum = rp + rm
    up1, up2, _ = _interface_traces(bulk.u(+1))
    um1, um2, _ = _interface_traces(bulk.u(-1))
    hp1, hp2, _ = _interface_traces(bulk.h(+1))
    hm1, hm2, _ = _interface_traces(bulk.h(-1))

    out = np.zeros((g2.ny, g2.nx))
    NHp = NHm = None
    if sigma > 0.0:
        Hf = geo.mean_curvature(f).values
        NHp = dn_apply(f, +1, Hf, nz, tol=dn_tol)
        NHm = dn_apply(f, -1, Hf, nz, tol=dn_tol)
        out += (sigma / rsum**2) * (rp * NHp + rm * NHm)

    out -= (2.0 / rsum) * ((rp * up1 + rm * um1) * d1t + (rp * up2 + rm * um2) * d2t)

    # note the raw h products here, against the rho-divided ones in the jump
    out -= (1.0 / rsum) * _quadform(
        f,
        rp * up1 * up1 - hp1 * hp1 + rm * um1 * um1 - hm1 * hm1,
        rp * up1 * up2 - hp1 * hp2 + rm * um1 * um2 - hm1 * hm2,
        rp * up2 * up2 - hp2 * hp2 + rm * um2 * um2 - hm2 * hm2,
    )

    pu_p, ph_p = pressures[+1]
    pu_m, ph_m = pressures[-1]
    g3p = bulk.u(+1).grid3
    g3m = bulk.u(-1).grid3
    pi_p = g3p.normal_dot_trace_gradient(rp * pu_p.values - ph_p.values)
    pi_m = g3m.normal_dot_trace_gradient(rm * pu_m.values - ph_m.values)
    out -= (pi_p + pi_m) / rsum

    if not f.is_flat:
        # over a flat interface the two half-space DN operators coincide and
        # the (N+ - N-) difference annihilates every correction exactly
        arg = (2.0 / rsum) * ((up1 - um1) * d1t + (up2 - um2) * d2t)
        arg += (1.0 / rsum) * _quadform(
            f,
            up1 * up1 - hp1 * hp1 / rp - um1 * um1 + hm1 * hm1 / rm,
            up1 * up2 - hp1 * hp2 / rp - um1 * um2 + hm1 * hm2 / rm,
            up2 * up2 - hp2 * hp2 / rp - um2 * um2 + hm2 * hm2 / rm,
        )
        arg += (pi_p - pi_m) / rsum
        if sigma > 0.0:
            arg -= (sigma / rsum**2) * (NHp - NHm)
        arg = geo.dealias_values(arg, g2)
        amean = float(np.mean(arg))
        if abs(amean) > 1e-13:
            log.debug("theta_rhs: correction argument mean %.3e projected", amean)
        sol, _ = dn_tilde_inverse(f, arg, nz, rho_plus=rp, rho_minus=rm,
                                  tol=tol, inner_tol=dn_tol)
        out += dn_apply(f, +1, sol, nz, tol=dn_tol) - dn_apply(f, -1, sol, nz, tol=dn_tol)

    return dealias(FourierField2D.from_values(g2, out))


def recover_pressure(surface: SurfaceState, bulk: BulkState, params: PhysParams,
                     pressures: dict = None, tol: float = 1e-9,
                     dn_tol: float = 1e-11) -> tuple:
    """Total pressure per phase as strip fields.

    Each phase combines the harmonic extension of its interface trace with
    the quadratic pressures: p = ext(pbar) + rho p_uu - p_hh.  The traces
    are built so their jump equals sigma H(f); for the one-fluid variant
    the upper phase is vacuum, p+ = 0 and pbar- = -sigma H(f) directly.
    """
    f = surface.f
    nz = bulk.nz
    if pressures is None:
        pressures = quadratic_pressures(bulk, params, tol=dn_tol)
    sHf = params.sigma * geo.mean_curvature(f).values

    if params.variant == "one-fluid":
        rho = params.rho_minus
        pu, ph = pressures[-1]
        g3m = bulk.u(-1).grid3
        ext = harmonic_extension(f, -1, -sHf, nz, tol=dn_tol)
        pm = StripField3D(g3m, ext.values + rho * pu.values - ph.values)
        pp = StripField3D.zeros(mapped_grid(f, +1, nz))
        return pp, pm

    rp, rm = params.rho_plus, params.rho_minus
    gplus, gminus = compute_g_pm(surface, bulk, params, pressures=pressures, tol=dn_tol)
    gdiff = (gplus - gminus).values
    argp = gdiff + dn_apply(f, -1, sHf, nz, tol=dn_tol) / rm
    argm = gdiff - dn_apply(f, +1, sHf, nz, tol=dn_tol) / rp
    pbar_p, _ = dn_tilde_inverse(f, argp, nz, rho_plus=rp, rho_minus=rm,
                                 tol=tol, inner_tol=dn_tol)
    pbar_m, _ = dn_tilde_inverse(f, argm, nz, rho_plus=rp, rho_minus=rm,
                                 tol=tol, inner_tol=dn_tol)

    out = []
    for side, pbar in ((+1, pbar_p), (-1, pbar_m)):
        rho = params.rho(side)
        pu, ph = pressures[side]
        ext = harmonic_extension(f, side, pbar, nz, tol=dn_tol)
        g3 = bulk.u(side).grid3
        out.append(StripField3D(g3, ext.values + rho * pu.values - ph.values))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# bulk transport


def _advect(a: VectorField3D, grads) -> tuple:
    """(a . grad) of the field whose per-component gradients are grads."""
    return tuple(
        a.comps[0] * g[0] + a.comps[1] * g[1] + a.comps[2] * g[2] for g in grads
    )


def vorticity_current_rhs(bulk: BulkState, sides=(1, -1)) -> tuple:
    """Transport, stretching, and exchange terms of the curl fields.

    d omega = -(u.grad) omega + (h.grad) j + (omega.grad) u - (j.grad) h
    d j     = -(u.grad) j + (h.grad) omega + (j.grad) u - (omega.grad) h
              - 2 sum_i grad u_i x grad h_i
    evaluated pointwise with spectral horizontal and FD vertical
    derivatives, dealiased.  Returns ({side: d omega}, {side: d j}).
    """
    domega = {}
    dj = {}
    for side in sides:
        u, h = bulk.u(side), bulk.h(side)
        om, jc = bulk.omega(side), bulk.j(side)
        g3 = u.grid3
        g2 = g3.grid
        gu = [g3.grad(c) for c in u.comps]
        gh = [g3.grad(c) for c in h.comps]
        go = [g3.grad(c) for c in om.comps]
        gj = [g3.grad(c) for c in jc.comps]

        adv_o = _advect(u, go)
        adv_j = _advect(u, gj)
        str_o = _advect(h, gj)
        str_j = _advect(h, go)
        bend_o = _advect(om, gu)
        bend_j = _advect(jc, gu)
        twist_o = _advect(jc, gh)
        twist_j = _advect(om, gh)

        ex1 = np.zeros(g3.shape)
        ex2 = np.zeros(g3.shape)
        ex3 = np.zeros(g3.shape)
        for i in range(3):
            a1, a2, a3 = gu[i]
            b1, b2, b3 = gh[i]
            ex1 += a2 * b3 - a3 * b2
            ex2 += a3 * b1 - a1 * b3
            ex3 += a1 * b2 - a2 * b1

        do = [
            dealias3(-adv_o[c] + str_o[c] + bend_o[c] - twist_o[c], g2)
            for c in range(3)
        ]
        djk = [-adv_j[c] + str_j[c] + bend_j[c] - twist_j[c] for c in range(3)]
        djk[0] -= 2.0 * ex1
        djk[1] -= 2.0 * ex2
        djk[2] -= 2.0 * ex3
        domega[side] = VectorField3D(g3, do)
        dj[side] = VectorField3D(g3, tuple(dealias3(c, g2) for c in djk))
    return domega, dj


def grid_motion_rhs(surface: SurfaceState, F: VectorField3D) -> VectorField3D:
    """Advection induced by the moving stretch grid.

    Node heights are x3 = (1 - r) f + r side, so when f moves with speed
    P theta a value stored at fixed (r, x') drifts by (1 - r) P theta d3 F.
    """
    g3 = F.grid3
    pth = surface.p_theta().values
    zfac = g3.one_minus_r * pth[None]
    comps = tuple(
        dealias3(zfac * (g3.cvert[None] * deriv_r(c, g3.dr)), g3.grid)
        for c in F.comps
    )
    return VectorField3D(g3, comps)


def wall_average_rhs(bulk: BulkState, sides=(1, -1)) -> tuple:
    """Drift of the wall means of the tangential components.

    da_i = -<u_j d_j u_i - h_j d_j h_i>, db_i = -<u_j d_j h_i - h_j d_j u_i>
    averaged over the wall layer; the vertical terms drop since u3 = h3
    vanish there.  Returns (da_plus, da_minus, db_plus, db_minus).
    """
    da = {+1: (0.0, 0.0), -1: (0.0, 0.0)}
    db = {+1: (0.0, 0.0), -1: (0.0, 0.0)}
    for side in sides:
        g2 = bulk.u(side).grid3.grid
        uw = [geo.dealias_values(bulk.u(side).comps[i][-1], g2) for i in (0, 1)]
        hw = [geo.dealias_values(bulk.h(side).comps[i][-1], g2) for i in (0, 1)]
        du = [[geo.deriv_values(uw[i], g2, j) for j in (1, 2)] for i in (0, 1)]
        dh = [[geo.deriv_values(hw[i], g2, j) for j in (1, 2)] for i in (0, 1)]
        da[side] = tuple(
            -float(np.mean(uw[0] * du[i][0] + uw[1] * du[i][1]
                           - hw[0] * dh[i][0] - hw[1] * dh[i][1]))
            for i in (0, 1)
        )
        db[side] = tuple(
            -float(np.mean(uw[0] * dh[i][0] + uw[1] * dh[i][1]
                           - hw[0] * du[i][0] - hw[1] * du[i][1]))
            for i in (0, 1)
        )
    return da[+1], da[-1], db[+1], db[-1]


# ---------------------------------------------------------------------------
# the full derivative


def full_rhs(surface: SurfaceState, bulk: BulkState, params: PhysParams,
             tol: float = 1e-9, dn_tol: float = 1e-11) -> StateDerivative:
    """One complete time-derivative evaluation on a recovered state.

    df is the mean-free part of theta; dtheta assembles the surface groups;
    the curl fields get their transport terms plus the moving-grid
    advection; the wall means drift by the averaged tangential momentum
    balance.  Bulk consistency (recover_bulk) is the caller's concern, once
    per step stage; this function never re-solves for u and h.
    """
    sides = params.sides
    pressures = quadratic_pressures(bulk, params, tol=dn_tol)
    df = surface.p_theta()
    dth = theta_rhs(surface, bulk, params, pressures=pressures,
                    tol=tol, dn_tol=dn_tol)
    domega, dj = vorticity_current_rhs(bulk, sides=sides)
    for side in sides:
        ale_o = grid_motion_rhs(surface, bulk.omega(side))
        ale_j = grid_motion_rhs(surface, bulk.j(side))
        domega[side] = VectorField3D(
            domega[side].grid3,
            tuple(domega[side].comps[c] + ale_o.comps[c] for c in range(3)),
        )
        dj[side] = VectorField3D(
            dj[side].grid3,
            tuple(dj[side].comps[c] + ale_j.comps[c] for c in range(3)),
        )
    for side in (+1, -1):
        if side not in sides:
            g3 = bulk.u(side).grid3
            domega[side] = VectorField3D.zeros(g3)
            dj[side] = VectorField3D.zeros(g3)
    da_p, da_m, db_p, db_m = wall_average_rhs(bulk, sides=sides)
    return StateDerivative(
        df=df, dtheta=dth,
        domega_plus=domega[+1], domega_minus=domega[-1],
        dj_plus=dj[+1], dj_minus=dj[-1],
        da_plus=da_p, da_minus=da_m, db_plus=db_p, db_minus=db_m,
    )
