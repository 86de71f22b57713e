"""Stability and energy instrumentation.

Three families of measurements on a live state: the Syrovatskij quadratic
form that quantifies magnetic stabilization of the sheet, the symmetrized
surface energies built from the (q, gamma, beta) triple, and exponential
fits / mode-space Jacobians that turn time series and RHS evaluations into
frequencies and growth rates.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import hilbert

from . import dynamics as dyn
from .errors import FitPoorlyConditioned
from .geometry import Interface
from .paradiff import build_symmetrizer, quantize
from .spectral import FourierField2D, l2_norm, sobolev_norm

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Syrovatskij stability functional


@dataclass(frozen=True)
class StabilityReport:
    """Pointwise-minimized sheet stability data.

    lam is the global infimum of the stability form; phi_star the minimizing
    unit direction and x_star the minimizing point.  weak/strong are the
    classical velocity-jump inequalities evaluated pointwise over the whole
    trace (weak allows equality up to roundoff, strong is strict).
    """

    lam: float
    weak: bool
    strong: bool
    phi_star: tuple
    x_star: tuple
    weak_margin: float
    strong_margin: float


def _pair(v, shape):
    v1, v2 = v
    return (np.broadcast_to(np.asarray(v1, dtype=float), shape),
            np.broadcast_to(np.asarray(v2, dtype=float), shape))


def syrovatskij_lambda(h_plus, h_minus, du, rho_plus: float = 1.0,
                       rho_minus: float = 1.0, grid=None) -> StabilityReport:
    """Stability functional of the tangential traces.

    Inputs are pairs (first, second horizontal component) of scalars or
    arrays on the interface grid: the two magnetic traces and the velocity
    jump u+ - u-.  At each point the inner minimum over unit directions is
    the smallest eigenvalue of the 2x2 form

        M = (h+ h+^T + h- h-^T) / (rho+ + rho-) - v v^T,
        v = sqrt(rho+ rho-) / (rho+ + rho-) * du,

    taken in closed form; the outer minimum scans the grid.
    """
    shape = np.broadcast_shapes(*(np.shape(np.asarray(c, dtype=float))
                                  for p in (h_plus, h_minus, du) for c in p),
                                (1,))
    hp1, hp2 = _pair(h_plus, shape)
    hm1, hm2 = _pair(h_minus, shape)
    du1, du2 = _pair(du, shape)
    rsum = float(rho_plus) + float(rho_minus)
    cv = math.sqrt(float(rho_plus) * float(rho_minus)) / rsum
    v1, v2 = cv * du1, cv * du2

    m11 = (hp1 * hp1 + hm1 * hm1) / rsum - v1 * v1
    m12 = (hp1 * hp2 + hm1 * hm2) / rsum - v1 * v2
    m22 = (hp2 * hp2 + hm2 * hm2) / rsum - v2 * v2
    half_tr = 0.5 * (m11 + m22)
    disc = np.sqrt((0.5 * (m11 - m22)) ** 2 + m12 * m12)
    lam_pt = half_tr - disc

    idx = np.unravel_index(int(np.argmin(lam_pt)), lam_pt.shape)
    lam = float(lam_pt[idx])
    # eigenvector of the smaller eigenvalue from the second row of M - lam I
    e1, e2 = lam - float(m22[idx]), float(m12[idx])
    nrm = math.hypot(e1, e2)
    if nrm < 1e-14 * max(1.0, abs(lam)):
        phi = (1.0, 0.0) if m11[idx] <= m22[idx] else (0.0, 1.0)
    else:
        phi = (e1 / nrm, e2 / nrm)
    if grid is not None and lam_pt.shape == (grid.ny, grid.nx):
        x_star = (float(grid.X1[idx]), float(grid.X2[idx]))
    else:
        x_star = tuple(int(i) for i in idx)

    wmar = 2.0 * (hp1 ** 2 + hp2 ** 2 + hm1 ** 2 + hm2 ** 2) \
        - (du1 ** 2 + du2 ** 2)
    weak_margin = float(np.min(wmar))
    cross_pm = hp1 * hm2 - hp2 * hm1
    cross_up = du1 * hp2 - du2 * hp1
    cross_um = du1 * hm2 - du2 * hm1
    smar = np.abs(cross_pm) - np.maximum(np.abs(cross_up), np.abs(cross_um))
    strong_margin = float(np.min(smar))

    return StabilityReport(
        lam=lam,
        weak=bool(weak_margin >= -1e-12),
        strong=bool(strong_margin > 0.0),
        phi_star=phi, x_star=x_star,
        weak_margin=weak_margin, strong_margin=strong_margin,
    )


def stability_from_bulk(bulk: dyn.BulkState, params: dyn.PhysParams,
                        grid=None) -> StabilityReport:
    """Syrovatskij report from the same traces the dynamics used."""
    hp = bulk.h(1)
    hm = bulk.h(-1)
    up = bulk.u(1)
    um = bulk.u(-1)
    du = (up.comps[0][0] - um.comps[0][0], up.comps[1][0] - um.comps[1][0])
    return syrovatskij_lambda(
        (hp.comps[0][0], hp.comps[1][0]), (hm.comps[0][0], hm.comps[1][0]),
        du, rho_plus=params.rho_plus, rho_minus=params.rho_minus, grid=grid)


# ---------------------------------------------------------------------------
# symmetrized surface energies


@dataclass
class EnergyReport:
    t: float
    E1: float
    E2: float
    G1: float
    G2: float
    lam: float
    sobolev: dict = field(default_factory=dict)
    mean_f: float = 0.0
    mean_theta: float = 0.0


def _l2sq_values(vals: np.ndarray) -> float:
    # L^2(T^2) squared norm of a gridded function
    return float(TWO_PI ** 2 * np.mean(np.square(vals)))


def _symmetrizer_for(params: dyn.PhysParams, interface):
    if params.variant == "two-fluid-general":
        return build_symmetrizer(interface, s=params.s, variant="rho",
                                 rho=(params.rho_plus, params.rho_minus))
    if params.variant == "one-fluid":
        return build_symmetrizer(interface, s=params.s, variant="minus")
    return build_symmetrizer(interface, s=params.s, variant="mean")


def _energy_pair(fld: FourierField2D, df: FourierField2D, syms, coeffs):
    """(E1, E2) of one surface field under fixed trace coefficients.

    coeffs carries (w1, w2, v1, v2, hterms) with hterms a list of
    (weight, c1, c2) triples; the time derivative of T_beta T_q f is taken
    with the symbols frozen, which drops only commutators one order down.
    """
    qsym, gamma, beta = syms
    w1, w2, v1, v2, hterms = coeffs
    tq = quantize(beta, quantize(qsym, fld))
    e1 = 0.25 * l2_norm(quantize(gamma, tq)) ** 2

    d1 = tq.deriv(1).values
    d2 = tq.deriv(2).values
    jt = quantize(beta, quantize(qsym, df)).values + w1 * d1 + w2 * d2
    e2 = _l2sq_values(jt) - 0.5 * _l2sq_values(v1 * d1 + v2 * d2)
    for weight, c1, c2 in hterms:
        e2 += weight * _l2sq_values(c1 * d1 + c2 * d2)
    return e1, e2


def energy_functionals(surface: dyn.SurfaceState, bulk: dyn.BulkState,
                       params: dyn.PhysParams, df: FourierField2D,
                       t: float = 0.0, field_override=None) -> EnergyReport:
    """Energy report for one state; df is the last computed surface RHS.

    E1/E2 are evaluated on field_override when given (a filtered or
    linearized stand-in), otherwise on the live f like G1/G2.

    The advection weight w, the jump weight v, and the magnetic weights are
    chosen so the non-advective quadratic part equals half the pointwise
    Syrovatskij form applied to the gradient: positivity of G2 then tracks
    lam >= 0 for every density pair, and the unit-density weights
    (1/2 on v, 1/4 on each h) come out as the special case.  The one-fluid
    variant keeps the single advecting trace and its magnetic term with the
    full 1/rho- weight; there is no jump term to subtract.
    """
    g = surface.grid
    f_field = surface.f.f
    syms = _symmetrizer_for(params, surface.f)

    um = bulk.u(-1)
    hm = bulk.h(-1)
    if params.variant == "one-fluid":
        w1, w2 = um.comps[0][0], um.comps[1][0]
        zero = np.zeros(g.X1.shape)
        coeffs = (w1, w2, zero, zero,
                  [(1.0 / params.rho_minus, hm.comps[0][0], hm.comps[1][0])])
    else:
        up = bulk.u(1)
        hp = bulk.h(1)
        rp, rm, rsum = params.rho_plus, params.rho_minus, params.rho_sum
        w1 = (rp * up.comps[0][0] + rm * um.comps[0][0]) / rsum
        w2 = (rp * up.comps[1][0] + rm * um.comps[1][0]) / rsum
        cv = math.sqrt(rp * rm) / rsum
        v1 = cv * (up.comps[0][0] - um.comps[0][0])
        v2 = cv * (up.comps[1][0] - um.comps[1][0])
        hw = 0.5 / rsum
        coeffs = (w1, w2, v1, v2,
                  [(hw, hp.comps[0][0], hp.comps[1][0]),
                   (hw, hm.comps[0][0], hm.comps[1][0])])

    g1, g2 = _energy_pair(f_field, df, syms, coeffs)
    if field_override is None:
        e1, e2 = g1, g2
    else:
        e1, e2 = _energy_pair(field_override, df, syms, coeffs)

    lam = stability_from_bulk(bulk, params, grid=g).lam
    s = params.s
    sob = {
        "sqrt_sigma_f_hs1": math.sqrt(params.sigma) * sobolev_norm(f_field, s + 1.0),
        "f_hs05": sobolev_norm(f_field, s + 0.5),
        "df_hsm05": sobolev_norm(df, s - 0.5),
        "u_plus": bulk.u(1).rms(), "u_minus": um.rms(),
        "h_plus": bulk.h(1).rms(), "h_minus": hm.rms(),
        "omega_plus": bulk.omega(1).rms(), "omega_minus": bulk.omega(-1).rms(),
        "j_plus": bulk.j(1).rms(), "j_minus": bulk.j(-1).rms(),
    }
    return EnergyReport(
        t=float(t), E1=e1, E2=e2, G1=g1, G2=g2, lam=lam, sobolev=sob,
        mean_f=f_field.mean(), mean_theta=surface.theta.mean(),
    )


# ---------------------------------------------------------------------------
# mode-space Jacobian of the surface pair


def _mode_slot(field: FourierField2D, k1: int, k2: int) -> complex:
    return complex(field.coeffs[field.grid.mode_index(k1, k2)])


def numeric_jacobian(surface: dyn.SurfaceState, bulk: dyn.BulkState,
                     params: dyn.PhysParams, xi, eps: float = 1e-6,
                     tol: float = 1e-9) -> np.ndarray:
    """2x2 complex Jacobian of (df, dtheta) at one Fourier mode.

    Central differences around a flat background with constant traces: the
    mode coefficients (f^, theta^) at xi are perturbed along the cosine and
    sine directions, the bulk is re-recovered from the background wall
    means for each probe, and the complex responses are averaged (they
    agree up to the linearization error when the background is genuinely
    x-independent).
    """
    k1, k2 = int(xi[0]), int(xi[1])
    g = surface.grid
    f0 = surface.f.f.values
    th0 = surface.theta.values
    cosv = np.cos(k1 * g.X1 + k2 * g.X2)
    sinv = np.sin(k1 * g.X1 + k2 * g.X2)
    nz = bulk.nz
    kwargs = dict(a_plus=bulk.a_plus, a_minus=bulk.a_minus,
                  b_plus=bulk.b_plus, b_minus=bulk.b_minus,
                  nz=nz, sides=params.sides)

    def rhs_pair(fv, thv):
        surf = dyn.SurfaceState(
            Interface(FourierField2D.from_values(g, fv), c0=surface.f.c0),
            FourierField2D.from_values(g, thv))
        blk = dyn.recover_bulk(surf, **kwargs)
        dth = dyn.theta_rhs(surf, blk, params, tol=tol)
        dfl = surf.p_theta()
        return (_mode_slot(dfl, k1, k2), _mode_slot(dth, k1, k2))

    cols = []
    for slot in range(2):  # 0: perturb f, 1: perturb theta
        for phase, pert in ((1.0, 2.0 * cosv), (1j, -2.0 * sinv)):
            dfv = eps * pert if slot == 0 else 0.0
            dtv = eps * pert if slot == 1 else 0.0
            hi = rhs_pair(f0 + dfv, th0 + dtv)
            lo = rhs_pair(f0 - dfv, th0 - dtv)
            resp = np.array([(hi[0] - lo[0]), (hi[1] - lo[1])]) / (2.0 * eps)
            cols.append(resp / phase)
    jac = np.empty((2, 2), dtype=complex)
    jac[:, 0] = 0.5 * (cols[0] + cols[1])
    jac[:, 1] = 0.5 * (cols[2] + cols[3])
    return jac


# ---------------------------------------------------------------------------
# exponential fits on probe series


def dispersion_extract(times, series, trim: float = 0.1,
                       residual_tol: float = 0.1) -> tuple:
    """Fit A exp((mu + i omega) t) to a probe series.

    Complex input is used as its own analytic signal; real oscillatory
    input goes through the Hilbert transform with the edge fraction trim
    discarded, and real one-signed input is fitted on its log magnitude
    directly (a growing exponential has no oscillation for the transform
    to recover).  Returns (omega, mu, residual) with residual the relative
    l2 misfit of the straight-line model in log space.

    Raises FitPoorlyConditioned when the residual exceeds residual_tol;
    that usually means nonlinear contamination or a mixed mode.
    """
    t = np.asarray(times, dtype=float)
    z = np.asarray(series)
    if t.ndim != 1 or t.size != z.size or t.size < 8:
        raise ValueError("need matching 1-d series with at least 8 samples")
    if np.iscomplexobj(z):
        # a probe of a real standing wave arrives as complex with roundoff
        # in one part; demote it so the oscillatory real path applies
        zscale = float(np.max(np.abs(z)))
        if zscale > 0.0 and np.max(np.abs(z.imag)) <= 1e-12 * zscale:
            z = z.real.copy()
        elif zscale > 0.0 and np.max(np.abs(z.real)) <= 1e-12 * zscale:
            z = z.imag.copy()

    if not np.iscomplexobj(z):
        zr = np.asarray(z, dtype=float)
        if np.all(zr > 0.0) or np.all(zr < 0.0):
            y = np.log(np.abs(zr))
            omega, mu, resid = 0.0, *_line_fit(t, y)
            if resid > residual_tol:
                raise FitPoorlyConditioned(
                    f"log-magnitude fit residual {resid:.3f} > {residual_tol}")
            return omega, mu, resid
        dts = np.diff(t)
        if np.allclose(dts, dts[0], rtol=1e-8, atol=0.0):
            rec = _recurrence_fit(t, zr)
            if rec is not None:
                omega, mu, resid = rec
                if resid > residual_tol:
                    raise FitPoorlyConditioned(
                        f"recurrence fit residual {resid:.3f} "
                        f"> {residual_tol}")
                return omega, mu, resid
        a = hilbert(zr)
        k = max(1, int(round(trim * t.size)))
        t, a = t[k:-k], a[k:-k]
    else:
        a = z

    mag = np.abs(a)
    if np.min(mag) <= 0.0:
        raise FitPoorlyConditioned("series passes through zero; no rate fit")
    y = np.log(mag) + 1j * np.unwrap(np.angle(a))
    slope, resid = _line_fit_complex(t, y)
    mu = float(slope.real)
    omega = float(abs(slope.imag))
    if resid > residual_tol:
        raise FitPoorlyConditioned(
            f"exponential fit residual {resid:.3f} > {residual_tol}")
    return omega, mu, resid


def _recurrence_fit(t, zr):
    """Order-2 linear recurrence fit for a damped or growing cosine.

    On a uniform grid, A exp(mu t) cos(omega t + phi) satisfies
    s[n+1] = a s[n] + b s[n-1] exactly, with characteristic roots
    exp((mu +- i omega) dt); this reads the rate pair off a fraction of a
    period, where an envelope transform needs several.  Returns None when
    the fitted roots are real (nothing oscillatory to report) or the
    reconstruction overflows; the residual is the relative l2 misfit of
    the two-root model.
    """
    d = float(t[1] - t[0])
    scale = float(np.linalg.norm(zr - np.mean(zr)))
    if scale == 0.0:
        return None
    coef, *_ = np.linalg.lstsq(
        np.column_stack([zr[1:-1], zr[:-2]]), zr[2:], rcond=None)
    roots = np.roots([1.0, -coef[0], -coef[1]])
    if roots.size != 2 or abs(roots[0]) == 0.0 \
            or abs(roots[0].imag) < 1e-14 * abs(roots[0]):
        return None
    mu = float(np.log(abs(roots[0])) / d)
    omega = float(abs(np.angle(roots[0])) / d)
    n = np.arange(zr.size)
    with np.errstate(over="ignore", invalid="ignore"):
        basis = np.column_stack([roots[0] ** n, roots[1] ** n])
        if not np.all(np.isfinite(basis)):
            return None
        amps, *_ = np.linalg.lstsq(basis, zr.astype(complex), rcond=None)
        model = (basis @ amps).real
    if not np.all(np.isfinite(model)):
        return None
    resid = float(np.linalg.norm(zr - model) / scale)
    return omega, mu, resid


def _line_fit(t, y):
    A = np.vstack([np.ones_like(t), t]).T
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ sol
    base = np.linalg.norm(y - np.mean(y))
    rel = float(np.linalg.norm(res) / max(base, 1e-300))
    return float(sol[1]), rel


def _line_fit_complex(t, y):
    A = np.vstack([np.ones_like(t), t]).T
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ sol
    base = np.linalg.norm(y - np.mean(y))
    rel = float(np.linalg.norm(res) / max(base, 1e-300))
    return complex(sol[1]), rel
