"""Exact joint covariance of Brownian increments and a Riemann-Liouville process.

For a kernel ``f(s, t) = c (t - s)^alpha`` (alpha > -1/2) and a uniform grid
``t_i = i dt``, the Gaussian vector

    (dW_1, ..., dW_N, Y_{t_1}, ..., Y_{t_N}),   Y_t = int_0^t f(s, t) dW_s

is factorized once and sampled exactly.  The rough Bergomi driver is
``G = Y`` with ``alpha = H - 1/2`` and ``c = sqrt(2H)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import blas

from ..errors import DomainError, NumericalError
from ..quadrature import gauss_jacobi, gauss_legendre

MAX_STEPS = 1024
_NODES = 20


@dataclass(frozen=True)
class VolterraKernel:
    """``f(s, t) = scale * (t - s)**alpha``."""

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if not self.alpha > -0.5:
            raise DomainError(f"kernel exponent must exceed -1/2 (square integrable), got {self.alpha}")

    @classmethod
    def rough_bergomi(cls, H: float) -> "VolterraKernel":
        return cls(alpha=H - 0.5, scale=math.sqrt(2.0 * H))

    def __call__(self, s, t):
        return self.scale * np.power(np.asarray(t) - np.asarray(s), self.alpha)


def _unit_pair_integrals(alpha: float, n: int) -> np.ndarray:
    """``J[i, j] = int_0^{j} (i - u)^alpha (j - u)^alpha du`` on the unit grid, i >= j >= 1.

    With ``w = j - u`` the integrand is ``w^alpha (d + w)^alpha`` (d = i - j).
    Each unit piece [m-1, m] of w is integrated separately: the first with
    Gauss-Jacobi absorbing ``w^alpha``, the rest with Gauss-Legendre; the
    remaining singularity at ``w = -d`` is at least two half-lengths away from
    every piece.  Cumulative sums over pieces give all j at once.
    """
    J = np.zeros((n + 1, n + 1))
    idx = np.arange(1, n + 1)
    J[idx, idx] = idx ** (2.0 * alpha + 1.0) / (2.0 * alpha + 1.0)
    if n == 1:
        return J[1:, 1:]

    xj, wj = gauss_jacobi(_NODES, 0.0, alpha)
    wj_first = wj * 0.5 ** (alpha + 1.0)  # map (1+x)^alpha on [-1,1] to w^alpha on [0,1]
    w_first = 0.5 * (xj + 1.0)
    xl, wl = gauss_legendre(_NODES)
    m = np.arange(2, n + 1)[:, None]
    w_rest = (m - 1) + 0.5 * (xl + 1.0)[None, :]  # (n-1, nodes)
    base_rest = np.power(w_rest, alpha)

    for d in range(1, n):
        jmax = n - d
        first = np.dot(wj_first, np.power(d + w_first, alpha))
        pieces = np.empty(jmax)
        pieces[0] = first
        if jmax > 1:
            pieces[1:] = 0.5 * (base_rest[: jmax - 1] * np.power(d + w_rest[: jmax - 1], alpha)) @ wl
        cum = np.cumsum(pieces)
        j = np.arange(1, jmax + 1)
        J[j + d, j] = cum
        J[j, j + d] = cum
    return J[1:, 1:]


def _unit_cross(alpha: float, n: int) -> np.ndarray:
    """``C[i, j] = int_{j-1}^{min(j, i)} (i - u)^alpha du`` for node i, step j (unit grid)."""
    i = np.arange(1, n + 1)[:, None]
    j = np.arange(1, n + 1)[None, :]
    p = alpha + 1.0
    lag = (i - j).astype(float)
    out = (np.power(np.clip(lag + 1.0, 0.0, None), p) - np.power(np.clip(lag, 0.0, None), p)) / p
    return np.where(j <= i, out, 0.0)


@dataclass(frozen=True)
class GaussianFactorization:
    """Cholesky factor of the joint covariance of (dW_1..dW_N, Y_{t_1}..Y_{t_N}).

    ``chol`` is the full lower-triangular 2N x 2N factor.  Sampling uses its
    blocks: ``dW = sqrt(dt) xi``, ``Y = load @ xi + resid_chol @ xi'``.
    """

    kernel: VolterraKernel
    grid: np.ndarray
    dt: float
    cov: np.ndarray
    chol: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.grid.size

    @property
    def load(self) -> np.ndarray:
        n = self.n_steps
        return self.chol[n:, :n]

    @property
    def resid_chol(self) -> np.ndarray:
        n = self.n_steps
        return self.chol[n:, n:]

    @property
    def has_residual(self) -> bool:
        return bool(np.any(self.resid_chol))

    def var_y(self) -> np.ndarray:
        return np.diag(self.cov)[self.n_steps:]

    def sample(self, rng: np.random.Generator, n_paths: int, antithetic: bool = False):
        """Return ``(dW, Y)`` arrays of shape (n_paths, N)."""
        n = self.n_steps
        half = n_paths // 2 if antithetic else n_paths
        xi = rng.standard_normal((half, n))
        xi2 = rng.standard_normal((half, n)) if self.has_residual else None
        if antithetic:
            xi = np.concatenate([xi, -xi])
            if xi2 is not None:
                xi2 = np.concatenate([xi2, -xi2])
        dW = math.sqrt(self.dt) * xi
        if self.kernel.alpha == 0.0:
            # Constant kernel: Y is the scaled Brownian path itself.
            return dW, self.kernel.scale * np.cumsum(dW, axis=1)
        Y = _lower_times(self.load, xi)
        if xi2 is not None:
            Y += _lower_times(self.resid_chol, xi2)
        return dW, Y


def _lower_times(L: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``x @ L.T`` for lower-triangular ``L`` (half the flops of a dense product)."""
    return blas.dtrmm(1.0, np.ascontiguousarray(L), x.T, side=0, lower=1).T


def analytic_covariance(kernel: VolterraKernel, n: int, horizon: float) -> np.ndarray:
    """The 2N x 2N covariance matrix in closed form / quadrature."""
    dt = horizon / n
    a, c = kernel.alpha, kernel.scale
    cov = np.zeros((2 * n, 2 * n))
    cov[:n, :n] = dt * np.eye(n)
    cross = c * dt ** (a + 1.0) * _unit_cross(a, n)
    cov[n:, :n] = cross
    cov[:n, n:] = cross.T
    cov[n:, n:] = c * c * dt ** (2.0 * a + 1.0) * _unit_pair_integrals(a, n)
    return cov


@lru_cache(maxsize=16)
def _factorize(kernel: VolterraKernel, n: int, horizon: float, jitter: float):
    dt = horizon / n
    cov = analytic_covariance(kernel, n, horizon)
    cross = cov[n:, :n]
    load = cross / math.sqrt(dt)
    resid = cov[n:, n:] - load @ load.T
    resid = 0.5 * (resid + resid.T)
    scale = float(np.max(np.diag(cov[n:, n:]))) if kernel.scale else 0.0
    chol = np.zeros((2 * n, 2 * n))
    chol[:n, :n] = math.sqrt(dt) * np.eye(n)
    chol[n:, :n] = load
    if scale == 0.0 or np.max(np.abs(resid)) <= 1e-13 * scale:
        # Y is a function of the increments (alpha = 0): nothing left to sample.
        pass
    else:
        try:
            chol[n:, n:] = np.linalg.cholesky(resid + jitter * scale * np.eye(n))
        except np.linalg.LinAlgError:
            raise NumericalError(
                f"joint covariance is not positive definite (alpha={kernel.alpha}, N={n}); "
                "retry with jitter=1e-12",
                achieved=float(np.min(np.linalg.eigvalsh(resid))),
            ) from None
    grid = dt * np.arange(1, n + 1)
    cov.setflags(write=False)
    chol.setflags(write=False)
    grid.setflags(write=False)
    return GaussianFactorization(kernel=kernel, grid=grid, dt=dt, cov=cov, chol=chol)


def build_factorization(kernel: VolterraKernel, n_steps: int, horizon: float,
                        jitter: float = 0.0) -> GaussianFactorization:
    if not 1 <= n_steps <= MAX_STEPS:
        raise DomainError(f"n_steps must lie in [1, {MAX_STEPS}], got {n_steps}")
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    return _factorize(kernel, int(n_steps), float(horizon), float(jitter))


def build_covariance(H: float, grid, jitter: float = 0.0) -> GaussianFactorization:
    """Factorization for the rough Bergomi driver on a uniform grid ``t_1 < ... < t_N``."""
    grid = np.asarray(grid, dtype=float)
    n = grid.size
    if n == 0:
        raise DomainError("grid must be nonempty")
    dt = grid[0]
    if not np.allclose(np.diff(grid, prepend=0.0), dt, rtol=1e-10, atol=0.0):
        raise DomainError("grid must be uniform and start at dt")
    return build_factorization(VolterraKernel.rough_bergomi(H), n, float(grid[-1]), jitter)
