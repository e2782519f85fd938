import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from rough_edgeworth.errors import DomainError
from rough_edgeworth.specfun import beta_fn, hermite, hermite_scaled, norm_cdf, norm_pdf

# Explicit polynomials, used only as oracles.
EXPLICIT = {
    0: lambda x: 1.0 + 0 * x,
    1: lambda x: x,
    2: lambda x: x**2 - 1,
    3: lambda x: x**3 - 3 * x,
    4: lambda x: x**4 - 6 * x**2 + 3,
    5: lambda x: x**5 - 10 * x**3 + 15 * x,
    6: lambda x: x**6 - 15 * x**4 + 45 * x**2 - 15,
}

finite = st.floats(-8.0, 8.0, allow_nan=False)


class TestHermite:
    @pytest.mark.parametrize("x", [0.0, 1.0, -1.0, 2.0, -2.0])
    def test_degree_four(self, x):
        assert hermite(4, x) == pytest.approx(x**4 - 6 * x**2 + 3, abs=1e-14)

    def test_small_values(self):
        assert hermite(0, 7.3) == 1.0
        assert hermite(3, 2.0) == 2.0
        assert hermite(6, 1.0) == 16.0

    @given(finite)
    def test_matches_explicit_forms(self, x):
        for k, poly in EXPLICIT.items():
            assert hermite(k, x) == pytest.approx(poly(x), rel=1e-12, abs=1e-9)

    @given(finite, st.integers(1, 6))
    def test_recurrence(self, x, k):
        lhs = hermite(k + 1, x)
        rhs = x * hermite(k, x) - k * hermite(k - 1, x)
        assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-10)

    def test_array_input(self):
        x = np.linspace(-3, 3, 7)
        np.testing.assert_allclose(hermite(3, x), EXPLICIT[3](x), atol=1e-13)

    def test_negative_degree(self):
        with pytest.raises(DomainError):
            hermite(-1, 0.0)

    def test_orthogonality(self):
        nodes, weights = np.polynomial.hermite_e.hermegauss(64)
        weights = weights / math.sqrt(2 * math.pi)
        for m in range(7):
            for k in range(7):
                val = np.sum(weights * hermite(m, nodes) * hermite(k, nodes))
                expected = math.factorial(k) if m == k else 0.0
                assert val == pytest.approx(expected, abs=1e-8)

    @pytest.mark.parametrize("k", range(6))
    @pytest.mark.parametrize("x", [-2.5, -0.3, 0.0, 1.1, 3.0])
    def test_derivative_identity(self, k, x):
        h = 1e-5
        f = lambda u: hermite(k, u) * norm_pdf(u)
        fd = (f(x + h) - f(x - h)) / (2 * h)
        assert fd == pytest.approx(-hermite(k + 1, x) * norm_pdf(x), abs=1e-6)


class TestHermiteScaled:
    @given(finite, st.integers(0, 6))
    def test_unit_scale(self, x, k):
        assert hermite_scaled(k, x, 1.0) == pytest.approx(hermite(k, x), rel=1e-14, abs=1e-12)

    @given(finite, st.floats(0.01, 10.0))
    def test_degree_two(self, x, a):
        assert hermite_scaled(2, x, a) == pytest.approx(x * x - a, rel=1e-12, abs=1e-12)

    def test_degree_one(self):
        assert hermite_scaled(1, 3.0, 4.0) == pytest.approx(3.0)

    @pytest.mark.parametrize("a", [0.0, -1.0])
    def test_nonpositive_scale(self, a):
        with pytest.raises(DomainError):
            hermite_scaled(2, 1.0, a)


class TestNormal:
    def test_values(self):
        assert norm_pdf(0.0) == pytest.approx(0.3989422804014327, rel=1e-15)
        assert norm_cdf(0.0) == 0.5

    @given(st.floats(-30, 30))
    def test_symmetry(self, x):
        assert norm_cdf(x) + norm_cdf(-x) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("x", [-10.0, -5.0, -1.5, 0.3, 2.0, 7.0])
    def test_against_erfc(self, x):
        assert norm_cdf(x) == pytest.approx(0.5 * math.erfc(-x / math.sqrt(2)), rel=1e-14, abs=1e-14)


class TestBeta:
    def test_simple(self):
        assert beta_fn(1, 1) == pytest.approx(1.0, rel=1e-15)
        assert beta_fn(2, 2) == pytest.approx(1 / 6, rel=1e-14)

    def test_against_quadrature(self):
        val, _ = integrate.quad(lambda t: t**0.57 * (1 - t) ** 0.57, 0, 1, epsabs=1e-14)
        assert beta_fn(1.57, 1.57) == pytest.approx(val, rel=1e-12)
        assert beta_fn(1.57, 1.57) == pytest.approx(0.3471, abs=5e-5)

    @given(st.floats(0.05, 50), st.floats(0.05, 50))
    def test_symmetric(self, a, b):
        assert beta_fn(a, b) == pytest.approx(beta_fn(b, a), rel=1e-14)

    def test_large_arguments_do_not_overflow(self):
        assert 0.0 < beta_fn(300.0, 300.0) < 1e-150

    @pytest.mark.parametrize("a,b", [(0, 1), (1, -2)])
    def test_domain(self, a, b):
        with pytest.raises(DomainError):
            beta_fn(a, b)
