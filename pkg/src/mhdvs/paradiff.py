"""Paradifferential calculus on the torus for the interface symbols.

A symbol a(x, xi) of order m is held as a SymbolGrid: callables evaluating
the principal part, the subprincipal part (one order lower, optional), and
the closed-form xi-gradient of the principal part on collocation grids.
Quantization follows the cutoff convention

    (T_a u)^(xi) = sum_eta chi(xi - eta, eta) ahat(xi - eta, eta) psi(eta) uhat(eta),

with chi(theta, eta) = sum_k zeta_{k-3}(theta) phi_k(eta) built from the
dyadic family in spectral: the symbol is smoothed in x three blocks below
the frequency of the datum, and the psi filter removes the mean mode.  The
implementation sums over the active lattice modes of u exactly, smoothing
the evaluated symbol per block with an FFT; contributions pushed past the
lattice Nyquist wrap around, but the dyadic smoothing keeps them at
roundoff for the smooth symbols used here.

The interface symbols come in three families.  build_symbol_lambda gives
the first-order symbol of the one-sided harmonic normal derivative,
sqrt((1+|grad f|^2)|xi|^2 - (grad f . xi)^2), with its subprincipal
completion; build_symbol_l gives the second-order symbol l with
H(f) = -T_l f + smoother; build_symmetrizer returns the triple (q, gamma,
beta) with T_q T_lambda T_l ~ T_gamma T_gamma T_q.  Subprincipal parts are
assembled from closed-form xi-derivatives combined with spectral
x-derivatives of the evaluated grids; xi is never finite-differenced.
"""

from __future__ import annotations

import numpy as np

from .dn import dn_apply
from .geometry import Interface
from .spectral import (
    FourierField2D,
    Grid2D,
    dealias,
    fft2,
    ifft2,
    l2_norm,
    zeta_k,
)


class SymbolGrid:
    """A symbol of fixed order sampled on demand over the collocation grid.

    principal(e1, e2), sub(e1, e2) and dxi(e1, e2) take frequency components
    as float arrays of any mutually broadcastable shape and return arrays
    broadcastable against the (ny, nx) grid; batched quantization passes
    columns shaped (B, 1, 1).  dxi returns the pair of xi-partials of the
    principal part.  x_dependent marks symbols that genuinely vary in x;
    constant-in-x symbols take a fast multiplier path.
    """

    def __init__(self, grid: Grid2D, order: float, principal, sub=None, dxi=None,
                 x_dependent: bool = True, name: str = ""):
        self.grid = grid
        self.order = float(order)
        self.principal = principal
        self.sub = sub
        self.dxi = dxi
        self.x_dependent = bool(x_dependent)
        self.name = name

    def evaluate(self, e1, e2):
        out = self.principal(e1, e2)
        if self.sub is not None:
            out = out + self.sub(e1, e2)
        return out

    def __repr__(self) -> str:
        tag = self.name or "symbol"
        return f"SymbolGrid({tag}, order={self.order:g})"


def _dx(vals: np.ndarray, grid: Grid2D, axis: int) -> np.ndarray:
    """Spectral x_axis-derivative of grids shaped (..., ny, nx)."""
    K = grid.K1 if axis == 1 else grid.K2
    return ifft2(fft2(vals) * (1j * K))


class _FBlocks:
    """Grid functions of f entering every interface symbol.

    For a flat interface the entries collapse to scalars, which keeps the
    closures broadcasting to (B, 1, 1) outputs on batched frequencies.
    """

    def __init__(self, interface: Interface):
        if interface.is_flat:
            self.f1 = self.f2 = 0.0
            self.f11 = self.f12 = self.f22 = 0.0
            self.S = 1.0
            self.lap = 0.0
            self.T1 = self.T2 = 0.0
            self.V = 0.0
        else:
            self.f1, self.f2 = interface.gradf
            self.f11, self.f12, self.f22 = interface.hessf
            self.S = interface.metric_S
            self.lap = interface.lapf
            # Hessian contractions against grad f, shared by the sub-symbols
            self.T1 = self.f11 * self.f1 + self.f12 * self.f2
            self.T2 = self.f12 * self.f1 + self.f22 * self.f2
            self.V = self.f1 * self.T1 + self.f2 * self.T2


def _pqr(b: _FBlocks, e1, e2):
    P = b.f1 * e1 + b.f2 * e2
    Q = e1 * e1 + e2 * e2
    R = Q - P * P / b.S
    return P, Q, R


def _origin_safe(fn):
    """Wrap a symbol closure so the xi = 0 sample evaluates to 0.

    Symbols here are positively homogeneous, so divisions blow up at the
    origin; the psi filter removes that mode anyway, and zero keeps full
    lattice evaluations finite.
    """

    def wrapped(e1, e2):
        e1 = np.asarray(e1, dtype=float)
        e2 = np.asarray(e2, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = fn(e1, e2)
        live = (e1 * e1 + e2 * e2) > 0.0
        if isinstance(out, tuple):
            return tuple(np.where(live, o, 0.0) for o in out)
        return np.where(live, out, 0.0)

    return wrapped


# ----------------------------------------------------------------------------
# interface symbols


def build_symbol_lambda(interface: Interface, side: int = -1, rho=None) -> SymbolGrid:
    """First-order symbol of the one-sided harmonic normal derivative.

    side=+1 or -1 selects the upper or lower operator, side=0 their mean;
    alternatively rho=(w_plus, w_minus) builds the weighted combination
    w+ lambda^+ + w- lambda^-.  The two sides share the principal part
    sqrt(S |xi|^2 - (grad f . xi)^2), S = 1 + |grad f|^2; the subprincipal
    parts are mutual negated conjugates, so the mean is purely imaginary.
    """
    if rho is None:
        rho = {1: (1.0, 0.0), -1: (0.0, 1.0), 0: (0.5, 0.5)}[int(side)]
    wp, wm = float(rho[0]), float(rho[1])
    wsum = wp + wm
    b = _FBlocks(interface)
    g = interface.grid

    @_origin_safe
    def principal(e1, e2):
        P, Q, _ = _pqr(b, e1, e2)
        return wsum * np.sqrt(b.S * Q - P * P)

    @_origin_safe
    def dxi(e1, e2):
        P, Q, _ = _pqr(b, e1, e2)
        lam1 = np.sqrt(b.S * Q - P * P)
        return (wsum * (b.S * e1 - P * b.f1) / lam1,
                wsum * (b.S * e2 - P * b.f2) / lam1)

    if interface.is_flat:
        return SymbolGrid(g, 1.0, principal, dxi=dxi, x_dependent=False,
                          name="lambda")

    @_origin_safe
    def sub(e1, e2):
        low = _lambda_sub_minus(b, g, e1, e2)
        return wm * low - wp * np.conj(low)

    return SymbolGrid(g, 1.0, principal, sub=sub, dxi=dxi, name="lambda")


def _lambda_sub_minus(b: _FBlocks, g: Grid2D, e1, e2) -> np.ndarray:
    """Subprincipal part of the lower-side symbol.

    S/(2 lam1) * ( div(alpha grad f) + i d_xi lam1 . grad_x alpha ) with
    alpha = (lam1 + i grad f . xi)/S; x-derivatives are spectral on the
    evaluated grids, the xi-derivative of lam1 is closed form.
    """
    P, Q, _ = _pqr(b, e1, e2)
    lam1 = np.sqrt(b.S * Q - P * P)
    alpha = (lam1 + 1j * P) / b.S
    shape = np.broadcast_shapes(np.shape(alpha), (g.ny, g.nx))
    alpha = np.broadcast_to(alpha, shape)
    a1 = _dx(alpha, g, 1)
    a2 = _dx(alpha, g, 2)
    div_term = a1 * b.f1 + a2 * b.f2 + alpha * b.lap
    contr = (b.S * e1 - P * b.f1) / lam1 * a1 + (b.S * e2 - P * b.f2) / lam1 * a2
    return b.S / (2.0 * lam1) * (div_term + 1j * contr)


def build_symbol_l(interface: Interface) -> SymbolGrid:
    """Second-order curvature symbol: principal S^{-1/2}(|xi|^2 - P^2/S)
    plus the subprincipal completion -(i/2)(d_x . d_xi) of it, in closed
    form; every term carries a factor of grad f, so the subprincipal part
    vanishes wherever the interface is critical.
    """
    b = _FBlocks(interface)
    g = interface.grid

    @_origin_safe
    def principal(e1, e2):
        _, _, R = _pqr(b, e1, e2)
        return R / np.sqrt(b.S)

    @_origin_safe
    def dxi(e1, e2):
        P, _, _ = _pqr(b, e1, e2)
        c = 2.0 / np.sqrt(b.S)
        return (c * (e1 - P * b.f1 / b.S), c * (e2 - P * b.f2 / b.S))

    if interface.is_flat:
        return SymbolGrid(g, 2.0, principal, dxi=dxi, x_dependent=False, name="l")

    @_origin_safe
    def sub(e1, e2):
        P, _, _ = _pqr(b, e1, e2)
        W = e1 * b.T1 + e2 * b.T2
        s32 = b.S ** -1.5
        return 1j * (2.0 * s32 * W - 3.0 * b.S ** -2.5 * P * b.V + s32 * P * b.lap)

    return SymbolGrid(g, 2.0, principal, sub=sub, dxi=dxi, name="l")


def build_symmetrizer(interface: Interface, s: float = 6.0, variant: str = "mean",
                      rho=None, beta_power: float = None):
    """Symmetrizer triple (q, gamma, beta) for the third-order surface term.

    gamma has principal sqrt(l^(2) lambda^(1)) = (|xi|^2 - P^2/S)^{3/4} up to
    the density weight, with subprincipal part
    (1/2) sqrt(l^(2)/lambda^(1)) Re(lambda^(0)) - (i/2)(d_xi . d_x) of the
    principal; q = S^{-1/4}; beta is the principal power (gamma^(3/2))^p
    with p = (2s-1)/3 by default (beta_power overrides the exponent).

    The exponent of q is forced: with gamma^(3/2) = (l2 lam1)^{1/2} a
    function of R alone, the order-2 balance of q(lam # l) against
    (gamma # gamma) q reduces to a Poisson bracket of log q with R^{3/2},
    and only S^{-1/4} closes it.  Any other power leaves an order-2
    defect proportional to (d_xi R . d_x S).

    variant "mean" takes the equal-density average (its Re-term vanishes),
    "minus" the lower-side symbol, "rho" the density-weighted combination
    with weights rho=(rho_plus, rho_minus).
    """
    if variant not in ("mean", "minus", "rho"):
        raise ValueError(f"unknown symmetrizer variant {variant!r}")
    if variant == "rho":
        if rho is None:
            raise ValueError("variant 'rho' needs rho=(rho_plus, rho_minus)")
        wp, wm = float(rho[0]), float(rho[1])
    else:
        wp, wm = (0.5, 0.5) if variant == "mean" else (0.0, 1.0)
    wsum = wp + wm
    w32 = np.sqrt(wsum)
    p = (2.0 * s - 1.0) / 3.0 if beta_power is None else float(beta_power)
    b = _FBlocks(interface)
    g = interface.grid
    flat = interface.is_flat

    qv = b.S ** -0.25

    def q_principal(e1, e2):
        return qv + 0.0 * np.asarray(e1, dtype=float)

    def q_dxi(e1, e2):
        z = 0.0 * np.asarray(e1, dtype=float)
        return (z, z + 0.0 * np.asarray(e2, dtype=float))

    q = SymbolGrid(g, 0.0, q_principal, dxi=q_dxi, x_dependent=not flat, name="q")

    @_origin_safe
    def gamma_principal(e1, e2):
        _, _, R = _pqr(b, e1, e2)
        return w32 * R ** 0.75

    @_origin_safe
    def gamma_dxi(e1, e2):
        P, _, R = _pqr(b, e1, e2)
        c = w32 * 1.5 * R ** -0.25
        return (c * (e1 - P * b.f1 / b.S), c * (e2 - P * b.f2 / b.S))

    @_origin_safe
    def beta_principal(e1, e2):
        _, _, R = _pqr(b, e1, e2)
        return R ** (0.75 * p)

    @_origin_safe
    def beta_dxi(e1, e2):
        P, _, R = _pqr(b, e1, e2)
        c = 1.5 * p * R ** (0.75 * p - 1.0)
        return (c * (e1 - P * b.f1 / b.S), c * (e2 - P * b.f2 / b.S))

    if flat:
        gamma = SymbolGrid(g, 1.5, gamma_principal, dxi=gamma_dxi,
                           x_dependent=False, name=f"gamma-{variant}")
        beta = SymbolGrid(g, 1.5 * p, beta_principal, dxi=beta_dxi,
                          x_dependent=False, name="beta")
        return q, gamma, beta

    re_weight = wm - wp

    @_origin_safe
    def gamma_sub(e1, e2):
        d1, d2 = gamma_dxi(e1, e2)
        shape = np.broadcast_shapes(np.shape(d1), (g.ny, g.nx))
        poisson = -0.5j * (_dx(np.broadcast_to(d1, shape), g, 1)
                           + _dx(np.broadcast_to(d2, shape), g, 2))
        if re_weight == 0.0:
            return poisson
        P, _, R = _pqr(b, e1, e2)
        low = _lambda_sub_minus(b, g, e1, e2)
        re_term = 0.5 / w32 * R ** 0.25 / np.sqrt(b.S) * (re_weight * np.real(low))
        return re_term + poisson

    gamma = SymbolGrid(g, 1.5, gamma_principal, sub=gamma_sub, dxi=gamma_dxi,
                       name=f"gamma-{variant}")
    beta = SymbolGrid(g, 1.5 * p, beta_principal, dxi=beta_dxi, name="beta")
    return q, gamma, beta


# ----------------------------------------------------------------------------
# symbolic composition and adjoint


def symbol_sharp(a: SymbolGrid, b: SymbolGrid) -> SymbolGrid:
    """Composition symbol a # b keeping two orders: the principal product,
    the cross sub-terms, and the Poisson correction (1/i) d_xi a . d_x b."""
    if a.grid is not b.grid:
        raise ValueError("symbols live on different grids")
    g = a.grid

    def principal(e1, e2):
        return a.principal(e1, e2) * b.principal(e1, e2)

    def sub(e1, e2):
        t = None
        if a.sub is not None:
            t = a.sub(e1, e2) * b.principal(e1, e2)
        if b.sub is not None:
            t2 = a.principal(e1, e2) * b.sub(e1, e2)
            t = t2 if t is None else t + t2
        if a.dxi is not None and b.x_dependent:
            d1, d2 = a.dxi(e1, e2)
            bp = b.principal(e1, e2)
            shape = np.broadcast_shapes(np.shape(bp), (g.ny, g.nx))
            bp = np.broadcast_to(bp, shape)
            t3 = -1j * (d1 * _dx(bp, g, 1) + d2 * _dx(bp, g, 2))
            t = t3 if t is None else t + t3
        if t is None:
            t = 0.0 * principal(e1, e2)
        return t

    dxi = None
    if a.dxi is not None and b.dxi is not None:
        def dxi(e1, e2):
            da1, da2 = a.dxi(e1, e2)
            db1, db2 = b.dxi(e1, e2)
            ap = a.principal(e1, e2)
            bp = b.principal(e1, e2)
            return (da1 * bp + ap * db1, da2 * bp + ap * db2)

    x_dep = a.x_dependent or b.x_dependent
    return SymbolGrid(g, a.order + b.order, principal, sub=sub, dxi=dxi,
                      x_dependent=x_dep, name=f"({a.name}#{b.name})")


def symbol_adjoint(a: SymbolGrid) -> SymbolGrid:
    """Adjoint symbol a^(m) + conj(a^(m-1)) + (1/i)(d_x . d_xi) a^(m)."""
    g = a.grid

    def sub(e1, e2):
        t = None
        if a.sub is not None:
            t = np.conj(a.sub(e1, e2))
        if a.dxi is not None and a.x_dependent:
            d1, d2 = a.dxi(e1, e2)
            shape = np.broadcast_shapes(np.shape(d1), (g.ny, g.nx))
            t2 = -1j * (_dx(np.broadcast_to(d1, shape), g, 1)
                        + _dx(np.broadcast_to(d2, shape), g, 2))
            t = t2 if t is None else t + t2
        if t is None:
            t = 0.0 * a.principal(e1, e2)
        return t

    return SymbolGrid(g, a.order, a.principal, sub=sub, dxi=a.dxi,
                      x_dependent=a.x_dependent, name=f"{a.name}*")


# ----------------------------------------------------------------------------
# quantization


_ACTIVE_RTOL = 1e-14


def quantize(a: SymbolGrid, u: FourierField2D) -> FourierField2D:
    """Apply T_a to u on the lattice, exactly.

    Constant-in-x symbols reduce to the multiplier psi(xi) a(xi).  Otherwise
    each active mode eta of psi(D) u contributes its block-smoothed symbol
    grid times the mode's oscillation, accumulated in physical space.  The
    returned field is the real part; the discarded imaginary residue
    (roundoff whenever a(x, -xi) = conj a(x, xi)) is recorded on the result
    as imag_residue.
    """
    g = u.grid
    cu = u.coeffs * g.psi_weights
    if not a.x_dependent:
        m = a.evaluate(g.K1.astype(float), g.K2.astype(float))
        m = np.broadcast_to(m, (g.ny, g.nx))
        vals = ifft2(m * cu) * (g.nx * g.ny)
        out = FourierField2D.from_values(g, vals.real)
        out.imag_residue = float(np.max(np.abs(vals.imag)))
        return out

    peak = float(np.max(np.abs(cu)))
    if peak == 0.0:
        out = FourierField2D.zeros(g)
        out.imag_residue = 0.0
        return out
    thresh = _ACTIVE_RTOL * peak
    acc = np.zeros((g.ny, g.nx), dtype=complex)
    for k in range(g.n_blocks + 1):
        wk = g.block_weights[k]
        sel = (np.abs(cu) > thresh) & (wk > 0.0)
        if not np.any(sel):
            continue
        e1 = g.K1[sel].astype(float)
        e2 = g.K2[sel].astype(float)
        coef = cu[sel] * wk[sel]
        A = a.evaluate(e1[:, None, None], e2[:, None, None])
        A = np.broadcast_to(A, (e1.size, g.ny, g.nx))
        A = ifft2(fft2(A) * zeta_k(k - 3, g.kabs))
        phase = np.exp(1j * (e1[:, None, None] * g.X1 + e2[:, None, None] * g.X2))
        acc += np.einsum("b,byx->yx", coef, A * phase)
    out = FourierField2D.from_values(g, acc.real)
    out.imag_residue = float(np.max(np.abs(acc.imag)))
    return out


def quantize_adjoint(a: SymbolGrid, v: FourierField2D) -> FourierField2D:
    """Apply the discrete adjoint of T_a (w.r.t. the mean inner product).

    The adjoint kernel evaluates the conjugate symbol at the output mode:
    coeff_out(eta) = psi(eta) sum_k phi_k(eta) F[zeta_{k-3}(D) conj a(., eta) v](eta).
    """
    g = v.grid
    if not a.x_dependent:
        m = a.evaluate(g.K1.astype(float), g.K2.astype(float))
        m = np.broadcast_to(m, (g.ny, g.nx))
        return FourierField2D.from_coeffs(g, np.conj(m) * g.psi_weights * v.coeffs)

    vals = v.values
    out_hat = np.zeros((g.ny, g.nx), dtype=complex)
    for k in range(g.n_blocks + 1):
        wk = g.block_weights[k] * g.psi_weights
        sel = wk > 0.0
        if not np.any(sel):
            continue
        e1 = g.K1[sel].astype(float)
        e2 = g.K2[sel].astype(float)
        A = np.conj(a.evaluate(e1[:, None, None], e2[:, None, None]))
        A = np.broadcast_to(A, (e1.size, g.ny, g.nx))
        A = ifft2(fft2(A) * zeta_k(k - 3, g.kabs))
        prod_hat = fft2(A * vals[None]) / (g.nx * g.ny)
        rows, cols = np.nonzero(sel)
        out_hat[rows, cols] += wk[rows, cols] * prod_hat[np.arange(rows.size), rows, cols]
    return FourierField2D.from_coeffs(g, out_hat)


# ----------------------------------------------------------------------------
# paraproducts and the Bony decomposition


def paraproduct(a: FourierField2D, u: FourierField2D) -> FourierField2D:
    """Bony paraproduct T_a u = sum_k S_{k-3} a . Delta_k u.

    The lowpass S_m = zeta_m(D) keeps the mean for every m, so a constant
    factor reproduces c u exactly.  With that convention the splitting
    a u = T_a u + T_u a + bony_remainder(a, u) is exact on the lattice
    whenever both factors are mean-free (a constant component rides every
    lowpass and would be double-counted by the remainder).
    """
    g = u.grid
    ca = a.coeffs
    cu = u.coeffs
    acc = np.zeros((g.ny, g.nx))
    scale = g.nx * g.ny
    for k in range(g.n_blocks + 1):
        blk = cu * g.block_weights[k]
        if not np.any(blk):
            continue
        low = ifft2(ca * zeta_k(k - 3, g.kabs)).real * scale
        acc += low * (ifft2(blk).real * scale)
    return FourierField2D.from_values(g, acc)


def bony_remainder(a: FourierField2D, u: FourierField2D) -> FourierField2D:
    """Diagonal part of the product: sum over blocks |k - l| <= 2."""
    g = u.grid
    scale = g.nx * g.ny
    K = g.n_blocks
    ablk = [ifft2(a.coeffs * g.block_weights[k]).real * scale for k in range(K + 1)]
    ublk = [ifft2(u.coeffs * g.block_weights[k]).real * scale for k in range(K + 1)]
    acc = np.zeros((g.ny, g.nx))
    for k in range(K + 1):
        for l in range(max(0, k - 2), min(K, k + 2) + 1):
            acc += ablk[k] * ublk[l]
    return FourierField2D.from_values(g, acc)


# ----------------------------------------------------------------------------
# paralinearization probes


def curvature_linearized(interface: Interface, g_field: FourierField2D) -> FourierField2D:
    """Derivative of the mean-curvature map at f, applied to g.

    H'(f)[g] = div( grad g / sqrt(S) - (grad f . grad g) grad f / S^{3/2} ),
    evaluated spectrally with dealiased flux components.
    """
    g = interface.grid
    f1, f2 = interface.gradf
    S = interface.metric_S
    g1 = g_field.deriv(1).values
    g2 = g_field.deriv(2).values
    w = 1.0 / np.sqrt(S)
    cross = (f1 * g1 + f2 * g2) * w / S
    q1 = dealias(FourierField2D.from_values(g, g1 * w - cross * f1))
    q2 = dealias(FourierField2D.from_values(g, g2 * w - cross * f2))
    return q1.deriv(1) + q2.deriv(2)


def paralinearize_curvature_residual(interface: Interface, g_field: FourierField2D) -> dict:
    """Defect H'(f)[g] + T_l g of the paralinearized curvature.

    The leading term is T_l g; the defect sits two orders below it for data
    at high frequency.  Returns the residual, the leading field, and their
    L2 ratio.
    """
    lsym = build_symbol_l(interface)
    lead = quantize(lsym, g_field)
    residual = curvature_linearized(interface, g_field) + lead
    nl = l2_norm(lead)
    return {
        "residual": residual,
        "leading": lead,
        "ratio": l2_norm(residual) / nl if nl > 0 else np.inf,
    }


def paralinearize_dn_residual(interface: Interface, psi_field: FourierField2D,
                              side: int = -1, nz: int = 65, tol: float = 1e-11) -> dict:
    """Defect of the flattened paralinearization of the normal-derivative map.

    For the lower side, N_f psi = T_lambda (psi - T_B f) - T_V . grad f + r
    with B = (grad f . grad psi + N_f psi)/S and V = grad psi - B grad f; the
    returned residual is r = N_f psi - T_lambda psi - R1 where
    R1 = -T_lambda T_B f - T_V . grad f.  The upper side is the mirror image
    of the lower one across the interface, so it is evaluated by reflecting
    f.  Returns the residual, the leading field T_lambda psi, and their L2
    ratio.
    """
    if side == 1:
        g = interface.grid
        mirrored = Interface(FourierField2D.from_values(g, -interface.f.values),
                             c0=interface.c0)
        return paralinearize_dn_residual(mirrored, psi_field, side=-1, nz=nz, tol=tol)

    g = interface.grid
    lam = build_symbol_lambda(interface, side=-1)
    nf = dn_apply(interface, -1, psi_field, nz, tol=tol)
    nf_field = FourierField2D.from_values(g, nf)

    f1, f2 = interface.gradf
    p1 = psi_field.deriv(1).values
    p2 = psi_field.deriv(2).values
    B = (f1 * p1 + f2 * p2 + nf) / interface.metric_S
    V1 = p1 - B * f1
    V2 = p2 - B * f2

    tb_f = paraproduct(FourierField2D.from_values(g, B), interface.f)
    tv_gradf = (paraproduct(FourierField2D.from_values(g, V1), interface.f.deriv(1))
                + paraproduct(FourierField2D.from_values(g, V2), interface.f.deriv(2)))
    r1 = -1.0 * quantize(lam, tb_f) - tv_gradf

    lead = quantize(lam, psi_field)
    residual = nf_field - lead - r1
    nl = l2_norm(lead)
    return {
        "residual": residual,
        "leading": lead,
        "ratio": l2_norm(residual) / nl if nl > 0 else np.inf,
    }


def probe_frequencies(grid: Grid2D, start: int = 4) -> tuple:
    """Dyadic probe frequencies start, 2 start, ... up to nx // 4."""
    out = []
    m = start
    while m <= grid.nx // 4:
        out.append(m)
        m *= 2
    return tuple(out)


_ZERO_FLOOR = 1e-11


def remainder_order_probe(apply_fn, grid: Grid2D, freqs=None,
                          direction=(1, 0)) -> dict:
    """Growth order of an operator along single-mode probes.

    Feeds cos(m d . x) for m in freqs (default the dyadic ladder 4 ... nx/4),
    collects L2 norms of apply_fn's output, and fits the log-log slope.
    Norms at the roundoff floor are excluded from the fit: below the
    frequency where the dyadic smoothing admits the symbol's x-harmonics,
    the truncated calculus composes exactly and the difference measures
    nothing but cancellation.  If every norm sits at the floor the probe
    reports exact_zero=True with slope None, as flat-interface remainders
    do.
    """
    if freqs is None:
        freqs = probe_frequencies(grid)
    d1, d2 = direction
    norms = []
    for m in freqs:
        u = FourierField2D.from_function(
            grid, lambda X1, X2: np.cos(m * (d1 * X1 + d2 * X2)))
        norms.append(l2_norm(apply_fn(u)))
    norms = np.asarray(norms)
    live = norms > _ZERO_FLOOR
    result = {"freqs": tuple(freqs), "norms": norms, "exact_zero": False,
              "fit_freqs": tuple(np.asarray(freqs)[live])}
    if not np.any(live):
        result.update(slope=None, exact_zero=True)
        return result
    if np.sum(live) == 1:
        result.update(slope=None)
        return result
    lf = np.log(np.asarray(freqs, float)[live])
    ln = np.log(norms[live])
    result.update(slope=float(np.polyfit(lf, ln, 1)[0]))
    return result
