import math

import mpmath
import numpy as np
import pytest

from rough_edgeworth.errors import DomainError
from rough_edgeworth.mc import covariance as cv
from rough_edgeworth.mc.engine import batch_rng


def gg_oracle(H, t, s):
    """E[G_t G_s] for s <= t via the Gauss hypergeometric closed form."""
    a = mpmath.mpf(H) - mpmath.mpf(1) / 2
    t, s = mpmath.mpf(t), mpmath.mpf(s)
    d = t - s
    if d == 0:
        return float(2 * H * s ** (2 * a + 1) / (2 * a + 1))
    val = d**a * s ** (a + 1) / (a + 1) * mpmath.hyp2f1(-a, a + 1, a + 2, -s / d)
    return float(2 * H * val)


class TestAnalyticCovariance:
    @pytest.mark.parametrize("H", [0.07, 0.25])
    def test_entries_against_quadrature(self, H):
        n, theta = 8, 0.1
        fact = cv.build_covariance(H, theta / n * np.arange(1, n + 1))
        cov = fact.cov
        grid = fact.grid
        for i in range(n):
            for j in range(i + 1):
                ref = gg_oracle(H, grid[i], grid[j])
                assert cov[n + i, n + j] == pytest.approx(ref, rel=1e-10, abs=1e-14)

    @pytest.mark.parametrize("H", [0.05, 0.07, 0.3, 0.5])
    def test_variance_diagonal(self, H):
        fact = cv.build_factorization(cv.VolterraKernel.rough_bergomi(H), 64, 0.1)
        np.testing.assert_allclose(fact.var_y(), fact.grid ** (2 * H), rtol=1e-9)

    def test_variance_reference(self):
        fact = cv.build_factorization(cv.VolterraKernel.rough_bergomi(0.07), 10, 0.1)
        assert fact.var_y()[-1] == pytest.approx(0.72444, abs=1e-5)

    @pytest.mark.parametrize("H", [0.07, 0.2])
    def test_terminal_cross_moment(self, H):
        theta, n = 0.3, 32
        fact = cv.build_factorization(cv.VolterraKernel.rough_bergomi(H), n, theta)
        cross = fact.cov[2 * n - 1, :n].sum()
        expected = math.sqrt(2 * H) * theta ** (H + 0.5) / (H + 0.5)
        assert cross == pytest.approx(expected, rel=1e-12)

    def test_brownian_case(self):
        n, theta = 16, 0.5
        fact = cv.build_factorization(cv.VolterraKernel.rough_bergomi(0.5), n, theta)
        t = fact.grid
        np.testing.assert_allclose(fact.cov[n:, n:], np.minimum.outer(t, t), atol=1e-15)
        overlap = np.where(np.arange(n)[None, :] <= np.arange(n)[:, None], fact.dt, 0.0)
        np.testing.assert_allclose(fact.cov[n:, :n], overlap, atol=1e-15)
        assert not fact.has_residual

    @pytest.mark.parametrize("H", [0.05, 0.07, 0.25])
    def test_reconstruction(self, H):
        n = 128
        fact = cv.build_factorization(cv.VolterraKernel.rough_bergomi(H), n, 0.2)
        L = np.asarray(fact.chol)
        assert np.allclose(L, np.tril(L))
        np.testing.assert_allclose(L @ L.T, fact.cov, atol=1e-9)

    def test_grid_validation(self):
        with pytest.raises(DomainError):
            cv.build_covariance(0.1, [0.1, 0.3])
        with pytest.raises(DomainError):
            cv.build_factorization(cv.VolterraKernel.rough_bergomi(0.1), cv.MAX_STEPS + 1, 1.0)
        with pytest.raises(DomainError):
            cv.VolterraKernel(alpha=-0.5)


class TestSampling:
    @pytest.mark.parametrize("H", [0.07, 0.5])
    def test_sample_covariance(self, H):
        n, m = 16, 200_000
        fact = cv.build_factorization(cv.VolterraKernel.rough_bergomi(H), n, 0.1)
        dW, Y = fact.sample(batch_rng(7, 0), m)
        X = np.concatenate([dW, Y], axis=1)
        emp = X.T @ X / m
        cov = np.asarray(fact.cov)
        # Standard error of a product moment: sqrt((c_ii c_jj + c_ij^2) / m).
        d = np.diag(cov)
        se = np.sqrt((np.outer(d, d) + cov**2) / m)
        assert np.max(np.abs(emp - cov) / se) < 5.5

    def test_antithetic_mirror(self):
        fact = cv.build_factorization(cv.VolterraKernel.rough_bergomi(0.1), 8, 0.1)
        dW, Y = fact.sample(batch_rng(1, 0), 10, antithetic=True)
        np.testing.assert_array_equal(dW[:5], -dW[5:])
        np.testing.assert_array_equal(Y[:5], -Y[5:])

    def test_lower_times_matches_dense(self):
        rng = np.random.default_rng(0)
        L = np.tril(rng.standard_normal((6, 6)))
        x = rng.standard_normal((4, 6))
        np.testing.assert_allclose(cv._lower_times(L, x), x @ L.T, rtol=1e-13)
