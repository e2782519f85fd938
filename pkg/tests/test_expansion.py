import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from rough_edgeworth import blackscholes as bs
from rough_edgeworth import expansion as ex
from rough_edgeworth.coeffs_rbergomi import coefficients
from rough_edgeworth.config import load_preset
from rough_edgeworth.errors import DomainError, ExpansionDomainError
from rough_edgeworth.specfun import norm_pdf


def make(theta=0.05, H=0.07, kappa2=0.2, kappa3=-0.169, kappa4=0.078):
    return ex.ExpansionCoefficients.from_kappa2(theta, H, kappa2, kappa3, kappa4)


coef_strategy = st.builds(
    make,
    theta=st.floats(0.005, 0.6),
    H=st.floats(0.02, 0.5),
    kappa2=st.floats(0.05, 0.6),
    kappa3=st.floats(-0.5, 0.5),
    kappa4=st.floats(0.0, 0.5),
)


def quad(f, a=-12.0, b=12.0):
    val, _ = integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


class TestCoefficients:
    def test_sigma0_consistency_enforced(self):
        with pytest.raises(DomainError):
            ex.ExpansionCoefficients(theta=0.1, H=0.1, sigma0=0.1, kappa2=0.2, kappa3=0, kappa4=0)

    @pytest.mark.parametrize("H", [0.0, 0.6])
    def test_h_range(self, H):
        with pytest.raises(DomainError):
            make(H=H)

    def test_smile_point_k(self):
        with pytest.raises(DomainError):
            ex.SmilePoint(theta=0.04, z=1.0, k=0.3, iv=0.2, source=ex.Source.EXPANSION)
        p = ex.SmilePoint(theta=0.04, z=1.0, k=0.2, iv=0.2, source=ex.Source.EXPANSION)
        assert p.k == pytest.approx(math.sqrt(0.04))


class TestDensity:
    def test_lognormal_reduction(self):
        c = make(kappa3=0.0, kappa4=0.0)
        x = np.linspace(-4, 4, 9)
        np.testing.assert_allclose(ex.density_q(c, x), norm_pdf(x + c.sigma0 / 2), rtol=1e-15)
        assert ex.density_q(c, -c.sigma0 / 2) == pytest.approx(0.3989422804014327, rel=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(coef_strategy)
    def test_normalization(self, c):
        assert quad(lambda x: ex.density_q(c, x)) == pytest.approx(1.0, abs=1e-8)
        assert ex.density_normalization(c) == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(coef_strategy)
    def test_martingale_first_order_cancels(self, c):
        s0 = c.sigma0
        first = quad(lambda x: math.exp(s0 * x) * ex.density_q_terms(c, x)[1])
        lead = quad(lambda x: math.exp(s0 * x) * ex.density_q_terms(c, x)[0])
        assert first == pytest.approx(0.0, abs=1e-10)
        assert lead == pytest.approx(1.0, abs=1e-12)

    def test_terms_sum_to_density(self):
        c = make()
        x = np.linspace(-5, 5, 41)
        np.testing.assert_allclose(sum(ex.density_q_terms(c, x)), ex.density_q(c, x), rtol=1e-14)

    def test_atm_density_close_to_density_at_zero(self):
        # Agreement only to the order of the expansion: shrinks faster than theta^{2H}.
        gaps = []
        thetas = [0.04, 0.01, 0.0025]
        for th in thetas:
            c = make(theta=th, H=0.25, kappa3=-0.2, kappa4=0.1)
            gaps.append(abs(ex.atm_density(c) - ex.density_q(c, 0.0)))
        for g0, g1, t0, t1 in zip(gaps, gaps[1:], thetas, thetas[1:]):
            assert g1 < g0 * (t1 / t0) ** 0.5

    def test_atm_density_limits(self):
        assert ex.atm_density(make(kappa3=0, kappa4=0)) == pytest.approx(norm_pdf(make().sigma0 / 2))

    def test_atm_digital_against_quadrature(self):
        gaps = []
        thetas = [0.04, 0.01, 0.0025]
        for th in thetas:
            c = make(theta=th, H=0.25, kappa3=-0.2, kappa4=0.1)
            gaps.append(abs(ex.atm_digital(c) - quad(lambda x: ex.density_q(c, x), -12.0, 0.0)))
        for g0, g1, t0, t1 in zip(gaps, gaps[1:], thetas, thetas[1:]):
            assert g1 < g0 * (t1 / t0) ** 0.5

    def test_atm_digital_signs(self):
        base = make(kappa3=0.0)
        assert ex.atm_digital(make(kappa3=-0.2)) < ex.atm_digital(base)
        tiny = ex.ExpansionCoefficients.from_kappa2(1e-12, 0.5, 1e-3, 0.0, 0.0)
        assert ex.atm_digital(tiny) == pytest.approx(0.5, abs=1e-9)


class TestPutPrice:
    @given(st.floats(-4, 3), st.floats(0.005, 1.0), st.floats(0.05, 0.6))
    def test_black_scholes_reduction(self, z, theta, kappa2):
        c = make(theta=theta, kappa2=kappa2, kappa3=0.0, kappa4=0.0)
        z_sqrt = bs.convert_z(z, c.sigma0, theta, bs.Moneyness.SIGMA0, bs.Moneyness.SQRT_THETA)
        price = ex.price_to_sqrt_theta(c, ex.put_price_expansion(c, z))
        assert price == pytest.approx(bs.normalized_put(theta, z_sqrt, kappa2), rel=1e-10, abs=1e-14)

    def test_deep_otm_vanishes(self):
        assert ex.put_price_expansion(make(), -40.0) == pytest.approx(0.0, abs=1e-300)

    def test_density_integration_to_order(self):
        # Integrating the density against the payoff reproduces the price formula
        # up to terms the expansion drops, so the gap shrinks faster than theta^{2H}.
        H = 0.1
        thetas = [0.04, 0.01, 0.0025]
        gaps = []
        for th in thetas:
            c = make(theta=th, H=H)
            s0 = c.sigma0
            worst = 0.0
            for z in [-1.5, 0.0, 0.7]:
                payoff = lambda x: (math.exp(s0 * z) - math.exp(s0 * x)) * ex.density_q(c, x)
                via_density = quad(payoff, -12.0, z) / s0
                worst = max(worst, abs(ex.put_price_expansion(c, z) - via_density))
            gaps.append(worst)
        assert gaps[0] < 1e-3
        for g0, g1, t0, t1 in zip(gaps, gaps[1:], thetas, thetas[1:]):
            assert g1 < g0 * (t1 / t0) ** (2 * H)


class TestImpliedVolExpansion:
    @given(st.floats(-3, 3))
    def test_flat_without_corrections(self, z):
        assert ex.implied_vol_expansion(make(kappa3=0, kappa4=0), z) == pytest.approx(0.2, rel=1e-15)

    def test_atm_value(self):
        c = make()
        k2, k3, k4, th = c.kappa2, c.kappa3, c.kappa4, c.th_h
        expected = k2 * (1 + k3 * k2 * math.sqrt(c.theta) * th / 2 + (1.5 * k3**2 - k4) * th**2)
        assert ex.implied_vol_expansion(c, 0.0) == pytest.approx(expected, rel=1e-14)

    @given(st.floats(-3, 3), coef_strategy)
    def test_even_when_no_skew(self, z, c):
        c0 = make(theta=c.theta, H=c.H, kappa2=c.kappa2, kappa3=0.0, kappa4=c.kappa4)
        try:
            a = ex.implied_vol_expansion(c0, z)
        except ExpansionDomainError:
            with pytest.raises(ExpansionDomainError):
                ex.implied_vol_expansion(c0, -z)
            return
        assert ex.implied_vol_expansion(c0, -z) == a

    def test_out_of_domain(self):
        c = make(theta=0.6, kappa3=-0.5, kappa2=0.2, H=0.05)
        with pytest.raises(ExpansionDomainError):
            ex.implied_vol_expansion(c, 3.0)

    @pytest.mark.parametrize("theta", [0.02, 0.1, 0.3])
    def test_skew_and_curvature_match_differences(self, theta):
        c = make(theta=theta)
        h = 1e-5 * math.sqrt(theta)
        iv = lambda k: ex.implied_vol_expansion(c, k / math.sqrt(theta))
        d1 = (iv(h) - iv(-h)) / (2 * h)
        assert d1 == pytest.approx(ex.atm_skew(c), rel=1e-4)
        h2 = 1e-3 * math.sqrt(theta)
        d2 = (iv(h2) - 2 * iv(0.0) + iv(-h2)) / h2**2
        assert d2 == pytest.approx(ex.atm_curvature(c), rel=1e-3)

    def test_price_and_iv_expansions_agree_to_order(self, fig1_params):
        thetas = [0.04, 0.02, 0.01]
        gaps = []
        for th in thetas:
            c = coefficients(fig1_params, th)
            diffs = []
            for z in [-0.5, 0.0, 0.5]:
                w = bs.convert_z(z, c.sigma0, th, bs.Moneyness.SQRT_THETA, bs.Moneyness.SIGMA0)
                price = float(ex.price_to_sqrt_theta(c, ex.put_price_expansion(c, w)))
                diffs.append(abs(bs.implied_vol(th, z, price) - ex.implied_vol_expansion(c, z)))
            gaps.append(max(diffs))
        H = fig1_params.H
        for g0, g1, t0, t1 in zip(gaps, gaps[1:], thetas, thetas[1:]):
            assert g1 <= g0 * (t1 / t0) ** (2 * H)


class TestAtmQuantities:
    def test_skew_zero_without_kappa3(self):
        assert ex.atm_skew(make(kappa3=0.0)) == 0.0

    def test_skew_flat_at_half(self):
        assert ex.atm_skew(make(theta=0.01, H=0.5, kappa3=-0.2)) == pytest.approx(-0.2)
        assert ex.atm_skew(make(theta=0.5, H=0.5, kappa3=-0.2)) == pytest.approx(-0.2)

    def test_skew_reference_value(self, fig1_params):
        c = coefficients(fig1_params, 0.1)
        assert ex.atm_skew(c) == pytest.approx(-0.16933 * 0.1**-0.43, rel=1e-4)
        assert ex.atm_skew(c) == pytest.approx(-0.4557, abs=5e-4)

    def test_curvature_signs(self):
        assert ex.atm_curvature(make(kappa3=0.1, kappa4=0.03)) == pytest.approx(0.0, abs=1e-15)
        assert ex.atm_curvature(make(kappa3=0.0, kappa4=0.1)) > 0

    def test_curvature_flat_at_half(self):
        a = ex.atm_curvature(make(theta=0.01, H=0.5))
        b = ex.atm_curvature(make(theta=0.4, H=0.5))
        assert a == pytest.approx(b, rel=1e-14)


class TestPresetsNormalization:
    @pytest.mark.parametrize("name", ["fig1-left", "fig1-right", "fig2-left", "fig2-right"])
    def test_all_thetas(self, name):
        cfg = load_preset(name)
        params = cfg.rough_bergomi.params()
        for th in cfg.theta:
            c = coefficients(params, th, warn=False)
            assert ex.density_normalization(c) == pytest.approx(1.0, abs=1e-8)
