"""Stability form closed cases, energy functional values, and fit recovery."""

import math

import numpy as np
import pytest

import mhdvs.diagnostics as diag
import mhdvs.dynamics as dyn
from mhdvs.errors import FitPoorlyConditioned
from mhdvs.geometry import Interface
from mhdvs.spectral import FourierField2D, Grid2D

TWO_PI = 2.0 * math.pi


class TestSyrovatskij:
    def test_orthogonal_unit_fields(self):
        rep = diag.syrovatskij_lambda((1.0, 0.0), (0.0, 1.0), (0.0, 0.0))
        assert rep.lam == pytest.approx(0.5, abs=1e-14)
        assert rep.weak and rep.strong

    def test_aligned_fields_negative_direction(self):
        delta = 0.3
        rep = diag.syrovatskij_lambda((1.0, 0.0), (1.0, 0.0), (0.0, delta))
        assert rep.lam == pytest.approx(-delta ** 2 / 4.0, abs=1e-14)
        assert abs(rep.phi_star[1]) == pytest.approx(1.0, abs=1e-12)
        assert abs(rep.phi_star[0]) < 1e-12

    def test_all_zero(self):
        rep = diag.syrovatskij_lambda((0.0, 0.0), (0.0, 0.0), (0.0, 0.0))
        assert rep.lam == 0.0

    def test_stable_preset_value(self):
        # the magnetically stabilized configuration used by the long runs
        rep = diag.syrovatskij_lambda((2.0, 0.0), (0.0, 2.0), (2.0, 0.0))
        assert rep.lam == pytest.approx(1.0, abs=1e-14)
        assert rep.weak
        # du x h- ties |h+ x h-|, so the strict inequality just fails
        assert not rep.strong
        assert rep.strong_margin == pytest.approx(0.0, abs=1e-14)

    def test_strong_case(self):
        rep = diag.syrovatskij_lambda((2.0, 0.0), (0.0, 2.0), (0.5, 0.0))
        assert rep.strong

    def test_general_density_closed_form(self):
        # rho = (3, 1): M = diag(1 - 3 d^2 / 16, 1) for h+ = (2,0), h- = (0,2)
        rep = diag.syrovatskij_lambda((2.0, 0.0), (0.0, 2.0), (2.0, 0.0),
                                      rho_plus=3.0, rho_minus=1.0)
        assert rep.lam == pytest.approx(0.25, abs=1e-14)

    def test_worst_point_location(self):
        g = Grid2D.get(32, 32)
        # h+ weakens near x1 = pi while everything else is uniform
        hp1 = 2.0 - 1.5 * np.exp(-2.0 * (g.X1 - np.pi) ** 2)
        rep = diag.syrovatskij_lambda((hp1, 0.0), (0.0, 2.0), (1.0, 0.0),
                                      grid=g)
        assert abs(rep.x_star[0] - np.pi) < 0.25

    def test_weak_follows_from_lambda(self):
        # min eigenvalue >= 0 forces trace >= 0, which is the weak inequality
        rng = np.random.default_rng(7)
        seen_stable = 0
        for _ in range(40):
            hp, hm, du = rng.normal(size=(3, 2)) * 2.0
            rep = diag.syrovatskij_lambda(tuple(hp), tuple(hm), tuple(du))
            if rep.lam >= 0.0:
                seen_stable += 1
                assert rep.weak
        assert seen_stable > 0


def _flat_state(g, params, eps=0.0, mode=(1, 0), nz=17, **means):
    if eps:
        k1, k2 = mode
        f = Interface.from_function(
            g, lambda x1, x2: eps * np.cos(k1 * x1 + k2 * x2), c0=0.05)
    else:
        f = Interface.flat(g, c0=0.05)
    surf = dyn.SurfaceState(f, FourierField2D.zeros(g))
    bulk = dyn.recover_bulk(surf, nz=nz, sides=params.sides, **means)
    return surf, bulk


class TestEnergies:
    def test_quiescent_flat_zero(self):
        g = Grid2D.get(16, 16)
        params = dyn.PhysParams(sigma=0.1)
        surf, bulk = _flat_state(g, params)
        rep = diag.energy_functionals(surf, bulk, params,
                                      FourierField2D.zeros(g))
        assert rep.E1 == 0.0 and rep.E2 == 0.0
        assert rep.G1 == 0.0 and rep.G2 == 0.0
        assert rep.lam == 0.0
        assert rep.mean_f == 0.0 and rep.mean_theta == 0.0
        assert all(np.isfinite(v) for v in rep.sobolev.values())

    def test_capillary_mode_value(self):
        # mode-1 symmetrizer multipliers are all 1, so E1 = eps^2/4 * |cos|^2
        g = Grid2D.get(16, 16)
        eps = 1e-3
        params = dyn.PhysParams(sigma=0.1)
        surf, bulk = _flat_state(g, params, eps=eps)
        rep = diag.energy_functionals(surf, bulk, params,
                                      FourierField2D.zeros(g))
        expect = 0.25 * eps ** 2 * (TWO_PI ** 2 / 2.0)
        # the real symbols carry an O(eps^2) correction off the flat values
        assert rep.E1 == pytest.approx(expect, rel=1e-5)
        assert rep.G1 == rep.E1
        assert rep.E2 == pytest.approx(0.0, abs=1e-20)

    def test_mode_two_multiplier(self):
        # |xi|^{s+1} multiplier: mode 2 scales E1 by 2^{2s+2}
        g = Grid2D.get(32, 32)
        eps = 1e-3
        s = 6.0
        params = dyn.PhysParams(sigma=0.1, s=s)
        surf, bulk = _flat_state(g, params, eps=eps, mode=(2, 0))
        rep = diag.energy_functionals(surf, bulk, params,
                                      FourierField2D.zeros(g))
        expect = 0.25 * eps ** 2 * 2.0 ** (2 * s + 2) * (TWO_PI ** 2 / 2.0)
        assert rep.E1 == pytest.approx(expect, rel=1e-4)

    def test_g2_positive_on_stable_state(self):
        g = Grid2D.get(16, 16)
        params = dyn.PhysParams(sigma=0.01)
        f = Interface.from_function(
            g, lambda x1, x2: 0.01 * np.sin(x1) + 0.006 * np.cos(x2), c0=0.05)
        th = FourierField2D.from_function(
            g, lambda x1, x2: 0.01 * np.cos(x1))
        surf = dyn.SurfaceState(f, th)
        bulk = dyn.recover_bulk(surf, a_plus=(1.0, 0.0), a_minus=(-1.0, 0.0),
                                b_plus=(2.0, 0.0), b_minus=(0.0, 2.0), nz=17)
        df = dyn.theta_rhs(surf, bulk, params)
        rep = diag.energy_functionals(surf, bulk, params, df, t=1.5)
        assert rep.lam > 0.9  # near the flat preset value 1
        assert rep.G2 > 0.0
        assert rep.t == 1.5
        assert np.isfinite(rep.E2)

    def test_one_fluid_report(self):
        g = Grid2D.get(16, 16)
        params = dyn.PhysParams(sigma=0.1, variant="one-fluid")
        surf, bulk = _flat_state(g, params, eps=1e-3,
                                 a_minus=(0.5, 0.0), b_minus=(1.0, 0.0))
        df = surf.p_theta()
        rep = diag.energy_functionals(surf, bulk, params, df)
        assert np.isfinite(rep.E2) and rep.E2 >= 0.0
        assert rep.sobolev["u_plus"] == 0.0
        assert rep.sobolev["h_minus"] > 0.0

    def test_field_override(self):
        g = Grid2D.get(16, 16)
        params = dyn.PhysParams(sigma=0.1)
        surf, bulk = _flat_state(g, params, eps=1e-3)
        other = FourierField2D.from_function(
            g, lambda x1, x2: 2e-3 * np.cos(x1))
        rep = diag.energy_functionals(surf, bulk, params,
                                      FourierField2D.zeros(g),
                                      field_override=other)
        assert rep.E1 == pytest.approx(4.0 * rep.G1, rel=1e-10)


class TestNumericJacobian:
    def test_capillary_eigenvalues(self):
        g = Grid2D.get(16, 16)
        sigma = 0.5
        params = dyn.PhysParams(sigma=sigma)
        surf, bulk = _flat_state(g, params, nz=65)
        jac = diag.numeric_jacobian(surf, bulk, params, (1, 0))
        ev = np.linalg.eigvals(jac)
        m = math.tanh(1.0)
        expect = math.sqrt(sigma * m / 2.0)
        assert sorted(ev.imag) == pytest.approx([-expect, expect], rel=2e-3)
        assert np.max(np.abs(ev.real)) < 1e-4

    def test_kh_eigenvalues(self):
        g = Grid2D.get(16, 16)
        params = dyn.PhysParams(sigma=0.0)
        surf, bulk = _flat_state(g, params, nz=33,
                                 a_plus=(1.0, 0.0), a_minus=(-1.0, 0.0))
        jac = diag.numeric_jacobian(surf, bulk, params, (1, 0))
        ev = np.linalg.eigvals(jac)
        assert sorted(ev.real) == pytest.approx([-1.0, 1.0], rel=1e-3)

    def test_linearity_in_amplitude(self):
        g = Grid2D.get(16, 16)
        params = dyn.PhysParams(sigma=0.3)
        surf, bulk = _flat_state(g, params, nz=17)
        j1 = diag.numeric_jacobian(surf, bulk, params, (1, 0), eps=1e-6)
        j2 = diag.numeric_jacobian(surf, bulk, params, (1, 0), eps=5e-7)
        assert np.max(np.abs(j1 - j2)) / np.max(np.abs(j1)) < 1e-4


class TestDispersionExtract:
    def test_pure_cosine(self):
        omega = 0.19515
        t = np.linspace(0.0, 4.0 * TWO_PI / omega, 512)
        z = np.cos(omega * t)
        w, mu, res = diag.dispersion_extract(t, z)
        assert w == pytest.approx(omega, rel=1e-3)
        assert abs(mu) < 1e-3
        assert res < 0.05

    def test_pure_growth(self):
        t = np.linspace(0.0, 5.0, 256)
        z = 1e-6 * np.exp(0.98 * t)
        w, mu, res = diag.dispersion_extract(t, z)
        assert mu == pytest.approx(0.98, rel=5e-3)
        assert w == 0.0

    def test_complex_probe(self):
        t = np.linspace(0.0, 40.0, 400)
        z = 0.01 * np.exp((1e-5 + 0.7j) * t)
        w, mu, res = diag.dispersion_extract(t, z)
        assert w == pytest.approx(0.7, rel=1e-6)
        assert mu == pytest.approx(1e-5, abs=1e-8)

    def test_contaminated_series_rejected(self):
        t = np.linspace(0.0, 80.0, 600)
        z = np.exp(0.2j * t) + 0.9 * np.exp(0.41j * t)
        with pytest.raises(FitPoorlyConditioned):
            diag.dispersion_extract(t, z)

    def test_short_series_rejected(self):
        with pytest.raises(ValueError):
            diag.dispersion_extract([0.0, 1.0], [1.0, 2.0])

    def test_nearly_real_complex_input_demoted(self):
        # roundoff in the quadrature part must not force the complex path
        omega = 1.1575
        t = np.arange(0.0, 6.01, 0.25)
        z = 5e-5 * np.cos(omega * t) + 1e-20j * np.sin(3.0 * t)
        w, mu, res = diag.dispersion_extract(t, z)
        assert w == pytest.approx(omega, rel=1e-9)
        assert abs(mu) < 1e-9
