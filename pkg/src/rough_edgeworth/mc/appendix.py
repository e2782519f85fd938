"""Monte Carlo checks of conditional expectations of Wiener-Ito integrals given B_1.

For a functional ``I`` of a Brownian motion on [0, 1] with
``E[I | B_1 = x] = sum_k c_k H_k(x)``, orthogonality of the Hermite polynomials
gives ``E[I H_k(B_1)] = k! c_k``.  Each check estimates ``c_k`` by sample
means and compares against closed-form targets for the power kernel
``f(s, t) = scale * (t - s)**alpha``.

Functionals (``Y_t = int_0^t f(s, t) dB_s``):

* ``A1a``: ``int_0^1 Y_t dt``                         -> c_1 = F1
* ``A1b``: ``int_0^1 Y_t dB_t``                       -> c_2 = F1
* ``A1c``: ``int_0^1 Y_t^2 dB_t``                     -> c_3 = G, c_1 = F2
* ``A1d``: ``int_0^1 (int_s^1 f(s, t) dB_t)^2 ds``     -> c_2 = G, c_0 = F2
* ``A2``:  ``(int_0^1 Y_t dB_t)^2``                   -> c_4 = F1^2, c_2 = K, c_0 = F2

with ``F1 = int int f``, ``F2 = int int f^2``, ``G = int (int_0^t f ds)^2 dt``
and ``K = int (int_0^t f(s, t) ds + int_t^1 f(t, u) du)^2 dt``.

``Y`` is sampled exactly at the grid nodes jointly with the increments; time
integrals use the trapezoid rule and Ito integrals left-point sums.  For a
difference kernel ``int_s^1 f(s, t) dB_t`` is ``Y_{1-s}`` driven by the
time-reversed motion ``B_1 - B_{1-u}``, which has the same law and the same
endpoint, so A1d reuses ``Y``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import DiscretizationWarning, DomainError
from ..specfun import beta_fn, hermite
from .covariance import GaussianFactorization, VolterraKernel, build_factorization
from .engine import MCConfig, batch_rng, map_batches, pair_average

MAX_ORDER = 6
Z_THRESHOLD = 4.0


class Identity(enum.Enum):
    A1A = "A1a"
    A1B = "A1b"
    A1C = "A1c"
    A1D = "A1d"
    A2 = "A2"


def kernel_constant() -> VolterraKernel:
    """``f == 1``."""
    return VolterraKernel(alpha=0.0, scale=1.0)


def kernel_power(H: float) -> VolterraKernel:
    """``f(s, t) = (t - s)**(H - 1/2)``."""
    return VolterraKernel(alpha=H - 0.5, scale=1.0)


def kernel_zero() -> VolterraKernel:
    return VolterraKernel(alpha=0.0, scale=0.0)


@dataclass(frozen=True)
class KernelIntegrals:
    """The deterministic integrals appearing in the targets."""

    F1: float
    F2: float
    G: float
    K: float

    @classmethod
    def of(cls, kernel: VolterraKernel) -> "KernelIntegrals":
        a, c = kernel.alpha, kernel.scale
        p = a + 1.0
        F1 = c / (p * (a + 2.0))
        F2 = c * c / ((2.0 * a + 1.0) * (2.0 * a + 2.0))
        G = c * c / (p * p * (2.0 * a + 3.0))
        K = c * c / (p * p) * (2.0 / (2.0 * a + 3.0) + 2.0 * beta_fn(a + 2.0, a + 2.0))
        return cls(F1=F1, F2=F2, G=G, K=K)


def analytic_coefficients(kind: Identity, kernel: VolterraKernel) -> np.ndarray:
    """Targets ``c_0 .. c_MAX_ORDER`` of ``E[I | B_1 = x]`` in the Hermite basis."""
    kind = Identity(kind)
    q = KernelIntegrals.of(kernel)
    c = np.zeros(MAX_ORDER + 1)
    if kind is Identity.A1A:
        c[1] = q.F1
    elif kind is Identity.A1B:
        c[2] = q.F1
    elif kind is Identity.A1C:
        c[3], c[1] = q.G, q.F2
    elif kind is Identity.A1D:
        c[2], c[0] = q.G, q.F2
    else:
        c[4], c[2], c[0] = q.F1**2, q.K, q.F2
    return c


def _trapezoid_weights(n: int, dt: float) -> np.ndarray:
    """Weights on nodes t_1..t_N (the t_0 = 0 node carries Y_0 = 0)."""
    w = np.full(n, dt)
    w[-1] = 0.5 * dt
    return w


def discrete_coefficients(kind: Identity, fact: GaussianFactorization) -> np.ndarray:
    """Exact Hermite coefficients of the *discretized* functional (Gaussian moment formulas).

    Their distance to :func:`analytic_coefficients` is the discretization bias.
    """
    kind = Identity(kind)
    n, dt = fact.n_steps, fact.dt
    cov = np.asarray(fact.cov)
    yy = cov[n:, n:]
    yd = cov[n:, :n]  # Cov(Y_{t_i}, dB_j)
    a_node = yd.sum(axis=1)  # Cov(Y_{t_i}, B_1)
    var_node = np.diag(yy)
    # Left points P_j = Y_{t_{j-1}}, j = 1..N, with P_1 = Y_0 = 0.
    a_left = np.concatenate([[0.0], a_node[:-1]])
    var_left = np.concatenate([[0.0], var_node[:-1]])
    c = np.zeros(MAX_ORDER + 1)
    if kind is Identity.A1A:
        c[1] = _trapezoid_weights(n, dt) @ a_node
    elif kind is Identity.A1B:
        c[2] = dt * a_left.sum()
    elif kind is Identity.A1C:
        c[3] = dt * (a_left**2).sum()
        c[1] = dt * var_left.sum()
    elif kind is Identity.A1D:
        w = _trapezoid_weights(n, dt)
        c[2] = w @ a_node**2
        c[0] = w @ var_node
    else:
        pp = np.zeros((n, n))
        pp[1:, 1:] = yy[:-1, :-1]
        pd = np.zeros((n, n))  # Cov(P_j, dB_l)
        pd[1:, :] = yd[:-1, :]
        s1 = dt * a_left.sum()
        c[4] = s1 * s1
        # E[S^2 H_2(B_1)] / 2 with S = sum_j P_j dB_j, by Isserlis over the pairings.
        c[2] = dt * (a_left**2).sum() + 2.0 * dt * (a_left @ pd.T).sum() + dt * dt * pp.sum()
        c[0] = dt * var_left.sum()
    return c


@dataclass(frozen=True)
class IdentityResult:
    kind: Identity
    kernel: VolterraKernel
    n_samples: int
    estimate: np.ndarray
    stderr: np.ndarray
    analytic: np.ndarray
    discrete: np.ndarray

    @property
    def z_scores(self) -> np.ndarray:
        diff = self.estimate - self.analytic
        with np.errstate(divide="ignore", invalid="ignore"):
            z = diff / self.stderr
        return np.where(diff == 0.0, 0.0, z)

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z_scores)))

    @property
    def passed(self) -> bool:
        return self.max_abs_z <= Z_THRESHOLD


def _functionals(dW: np.ndarray, Y: np.ndarray, dt: float) -> dict[Identity, np.ndarray]:
    P = np.concatenate([np.zeros((Y.shape[0], 1)), Y[:, :-1]], axis=1)
    w = _trapezoid_weights(Y.shape[1], dt)
    ito = np.einsum("ij,ij->i", P, dW)
    return {
        Identity.A1A: Y @ w,
        Identity.A1B: ito,
        Identity.A1C: np.einsum("ij,ij->i", P * P, dW),
        Identity.A1D: (Y * Y) @ w,
        Identity.A2: ito * ito,
    }


def check_identities(kinds, kernel: VolterraKernel, cfg: MCConfig, *,
                     warn: bool = True) -> list[IdentityResult]:
    """Run several identity checks on one shared set of simulated paths."""
    kinds = [Identity(k) for k in kinds]
    if not kinds:
        raise DomainError("no identities requested")
    fact = build_factorization(kernel, cfg.n_steps, 1.0)
    orders = np.arange(MAX_ORDER + 1)
    fact_k = np.array([math.factorial(int(k)) for k in orders], dtype=float)

    def run(b: int, size: int):
        dW, Y = fact.sample(batch_rng(cfg.seed, b), size, cfg.antithetic)
        b1 = dW.sum(axis=1)
        herm = np.stack([hermite(int(k), b1) for k in orders], axis=1) / fact_k
        vals = _functionals(dW, Y, fact.dt)
        return {k: pair_average(vals[k][:, None] * herm, cfg.antithetic) for k in kinds}

    parts = map_batches(run, cfg.n_paths)
    results = []
    for kind in kinds:
        samples = np.concatenate([p[kind] for p in parts])
        m = samples.shape[0]
        est = samples.mean(axis=0)
        se = samples.std(axis=0, ddof=1) / math.sqrt(m) if m > 1 else np.full_like(est, math.nan)
        res = IdentityResult(kind=kind, kernel=kernel, n_samples=m, estimate=est, stderr=se,
                             analytic=analytic_coefficients(kind, kernel),
                             discrete=discrete_coefficients(kind, fact))
        if warn:
            bias = np.abs(res.discrete - res.analytic)
            if np.any(bias > se):
                worst = int(np.argmax(bias - se))
                warnings.warn(
                    f"{kind.value}: discretization bias {bias[worst]:.3g} exceeds the standard "
                    f"error {se[worst]:.3g} at Hermite order {worst} with {cfg.n_steps} steps; "
                    "refine the grid",
                    DiscretizationWarning, stacklevel=2,
                )
        results.append(res)
    return results


def appendix_identity_check(kind: Identity | str, kernel: VolterraKernel,
                            cfg: MCConfig) -> IdentityResult:
    """Hermite-projection check of a single identity."""
    return check_identities([kind], kernel, cfg)[0]


def check_suite(kernel: VolterraKernel, cfg: MCConfig, warn: bool = True) -> list[IdentityResult]:
    """All five identities on shared samples."""
    return check_identities(list(Identity), kernel, cfg, warn=warn)
