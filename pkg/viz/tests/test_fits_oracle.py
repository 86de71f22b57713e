"""Fit helpers and the closed-form overlay curves."""

import math

import numpy as np
import pytest

from mhdviz import capillary_omega, dispersion_root, fit_mode


class TestFitMode:
    def test_standing_wave_frequency(self):
        t = np.arange(0, 40, 0.5)
        z = 3e-4 * np.cos(1.2345 * t + 0.3)
        w, mu = fit_mode(t, z)
        assert w == pytest.approx(1.2345, rel=1e-9)
        assert abs(mu) < 1e-9

    def test_nearly_real_complex_input(self):
        t = np.arange(0, 40, 0.5)
        z = 3e-4 * np.cos(0.62 * t) + 1e-20j * np.sin(t)
        w, mu = fit_mode(t, z)
        assert w == pytest.approx(0.62, rel=1e-9)

    def test_one_signed_growth_uses_tail(self):
        t = np.arange(0, 6.05, 0.1)
        # growing plus decaying partner, as a sheet instability produces
        z = 1e-6 * (np.exp(0.98 * t) + np.exp(-0.98 * t))
        w, mu = fit_mode(t, z)
        assert w == 0.0
        assert mu == pytest.approx(0.98, rel=2e-3)

    def test_rotating_complex_exponential(self):
        t = np.arange(0, 10, 0.25)
        z = np.exp((0.1 + 2.0j) * t)
        w, mu = fit_mode(t, z)
        assert w == pytest.approx(2.0, rel=1e-12)
        assert mu == pytest.approx(0.1, rel=1e-10)

    def test_degenerate_series(self):
        t = np.arange(8.0)
        assert fit_mode(t, np.zeros(8)) is None
        assert fit_mode(t[:3], np.ones(3)) is None


class TestOracle:
    def test_quiescent_matches_capillary_form(self):
        for k in (1, 2, 3, 4):
            w, mu = dispersion_root(k, 0, 0.1)
            assert mu == 0.0
            assert w == pytest.approx(capillary_omega(0.1, k), rel=1e-14)

    def test_kh_growth_root(self):
        w, mu = dispersion_root(1, 0, 0.1,
                                a=((1.0, 0.0), (-1.0, 0.0)))
        assert w == 0.0
        assert mu == pytest.approx(
            math.sqrt(1.0 - 0.05 * math.tanh(1.0)), rel=1e-14)

    def test_crossed_fields_neutralize(self):
        a = ((1.0, 0.0), (-1.0, 0.0))
        b = ((2.0, 0.0), (0.0, 2.0))
        w, mu = dispersion_root(1, 0, 0.01, a=a, b=b)
        assert mu == 0.0
        assert w == pytest.approx(
            math.sqrt(1.0 + 0.005 * math.tanh(1.0)), rel=1e-14)

    def test_density_sum_in_denominator(self):
        w, _ = dispersion_root(2, 0, 0.1, rho=(2.0, 1.0))
        m = 2.0 * math.tanh(2.0)
        assert w == pytest.approx(math.sqrt(0.1 * 4.0 * m / 3.0), rel=1e-14)
