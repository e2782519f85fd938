"""Monte Carlo put prices, smiles and at-the-money skew under rough Bergomi.

Moneyness follows the public convention ``k = sqrt(theta) * z`` and prices are
normalized like :func:`blackscholes.normalized_put` (by ``F e^{-r theta}
sqrt(theta)``), so they can be inverted directly.

Two estimators share the same W paths (common random numbers):

* conditional Gaussian: given the W path, ``Y = sigma0 X`` is normal with mean
  ``-<M>/2 + rho int sqrt(v) dW`` and variance ``(1 - rho^2) <M>``; the put and
  digital are then closed-form per path;
* Euler: ``Y`` is simulated with an independent W' and the payoff averaged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .. import blackscholes as bs
from ..coeffs_rbergomi import RoughBergomiParams, sigma0 as curve_sigma0
from ..errors import ArbitrageError, DomainError, EstimatorUnavailable, NumericalError
from ..expansion import SmilePoint, Source
from ..specfun import norm_cdf, norm_pdf
from .engine import (
    Estimator,
    MCConfig,
    PathBatch,
    generate_batch,
    map_batches,
    mean_and_stderr,
    pair_average,
)


@dataclass
class PathSamples:
    """Per-sample payoffs at log-moneyness ``k`` (antithetic pairs already averaged).

    ``otm`` holds the out-of-the-money option (put for k <= 0, call for k > 0)
    normalized by sqrt(theta), shape (n_samples, n_k); ``digital`` is
    ``Q(sigma0 X <= k | W)``; ``martingale`` is ``E[exp(sigma0 X) | W]``
    (conditional) or ``exp(sigma0 X)`` (Euler).
    """

    k: np.ndarray
    theta: float
    otm: np.ndarray
    digital: np.ndarray
    martingale: np.ndarray

    @property
    def intrinsic(self) -> np.ndarray:
        """Normalized put intrinsic value ``(e^k - 1)_+ / sqrt(theta)`` per strike."""
        return np.maximum(np.expm1(self.k), 0.0) / math.sqrt(self.theta)

    @property
    def put(self) -> np.ndarray:
        """Per-sample normalized puts via parity with the known forward E[e^{sigma0 X}] = 1."""
        return self.otm + self.intrinsic[None, :]


def _integrals(batch: PathBatch, dt: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    v_left = batch.v_left
    sq = np.sqrt(v_left)
    qv = v_left.sum(axis=1) * dt
    ito = np.einsum("ij,ij->i", sq, batch.dW)
    return qv, ito, sq


def _lognormal_otm(mean, sd, k):
    """OTM option on ``e^Y``, ``Y ~ N(mean, sd^2)``, strike ``e^k``; shapes (n, 1) x (m,).

    Written as ``Phi(a) * expm1(b)`` with log-space normal tails so that deep
    wings neither cancel nor underflow prematurely.
    """
    x = mean + 0.5 * sd * sd - k[None, :]  # log(forward / strike)
    d1 = x / sd + 0.5 * sd
    d2 = d1 - sd
    kk = k[None, :]
    put_lo = special.log_ndtr(-d2)
    put = np.exp(kk + put_lo) * -np.expm1(np.minimum(x + special.log_ndtr(-d1) - put_lo, 0.0))
    call_lo = special.log_ndtr(d2)
    call = np.exp(kk + call_lo) * np.expm1(np.maximum(x + special.log_ndtr(d1) - call_lo, 0.0))
    return np.where(kk <= 0.0, put, call)


def _conditional_payoffs(qv, ito, rho, k):
    mean = (-0.5 * qv + rho * ito)[:, None]
    sd = np.sqrt((1.0 - rho * rho) * qv)[:, None]
    otm = _lognormal_otm(mean, sd, k)
    digital = special.ndtr((k[None, :] - mean) / sd)
    return otm, digital, np.exp(mean + 0.5 * sd * sd)[:, 0]


def _euler_payoffs(qv, ito, sq, dW_perp, rho, k):
    y = -0.5 * qv + rho * ito + math.sqrt(1.0 - rho * rho) * np.einsum("ij,ij->i", sq, dW_perp)
    ey = np.exp(y)[:, None]
    ek = np.exp(k)[None, :]
    otm = np.where(k[None, :] <= 0.0, np.maximum(ek - ey, 0.0), np.maximum(ey - ek, 0.0))
    digital = (y[:, None] <= k[None, :]).astype(float)
    return otm, digital, ey[:, 0]


def _perp_rng(seed: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(batch, 1))))


def path_samples(params: RoughBergomiParams, cfg: MCConfig, theta: float, k,
                 estimator: Estimator | None = None) -> PathSamples:
    """Simulate and return per-sample put/digital payoffs at log-moneyness ``k``."""
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta}")
    estimator = cfg.estimator if estimator is None else Estimator(estimator)
    rho = params.rho
    if estimator is Estimator.CONDITIONAL_GAUSSIAN and abs(rho) >= 1.0:
        raise EstimatorUnavailable("conditional variance vanishes for |rho| = 1; use the Euler estimator")
    k = np.atleast_1d(np.asarray(k, dtype=float))
    sqrt_theta = math.sqrt(theta)
    dt = theta / cfg.n_steps

    def run(b: int, size: int):
        batch = generate_batch(params, cfg, theta, b, size)
        qv, ito, sq = _integrals(batch, dt)
        if estimator is Estimator.CONDITIONAL_GAUSSIAN:
            otm, dig, mart = _conditional_payoffs(qv, ito, rho, k)
        else:
            half = size // 2 if cfg.antithetic else size
            xi = _perp_rng(cfg.seed, b).standard_normal((half, cfg.n_steps))
            if cfg.antithetic:
                xi = np.concatenate([xi, -xi])
            otm, dig, mart = _euler_payoffs(qv, ito, sq, math.sqrt(dt) * xi, rho, k)
        anti = cfg.antithetic
        return (pair_average(otm, anti) / sqrt_theta, pair_average(dig, anti),
                pair_average(mart, anti))

    parts = map_batches(run, cfg.n_paths)
    return PathSamples(
        k=k,
        theta=theta,
        otm=np.concatenate([p[0] for p in parts]),
        digital=np.concatenate([p[1] for p in parts]),
        martingale=np.concatenate([p[2] for p in parts]),
    )


def _price(params, cfg, theta, z, estimator):
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    samples = path_samples(params, cfg, theta, math.sqrt(theta) * z_arr, estimator)
    price, se = mean_and_stderr(samples.put)
    if np.ndim(z) == 0:
        return float(price[0]), float(se[0])
    return price, se


def price_put_conditional(params: RoughBergomiParams, cfg: MCConfig, theta: float, z):
    """Normalized put price and standard error by conditional-Gaussian Monte Carlo."""
    return _price(params, cfg, theta, z, Estimator.CONDITIONAL_GAUSSIAN)


def price_put_euler(params: RoughBergomiParams, cfg: MCConfig, theta: float, z):
    """Normalized put price and standard error by plain Euler Monte Carlo."""
    return _price(params, cfg, theta, z, Estimator.EULER)


def smile_from_samples(samples: PathSamples) -> list[SmilePoint]:
    """Invert the mean OTM value at every strike; stderr by the delta method.

    Inversion works on the out-of-the-money leg, so deep in-the-money puts
    (intrinsic to machine precision) still yield an implied vol.
    """
    theta = samples.theta
    sqrt_theta = math.sqrt(theta)
    value, se = mean_and_stderr(samples.otm)
    points = []
    for k, v, e in zip(samples.k, value, se):
        z = float(k) / sqrt_theta
        try:
            iv = bs.implied_vol_otm(theta, z, float(v))
            err = float(e) / bs.vega(theta, z, iv)
        except (ArbitrageError, NumericalError):
            iv, err = None, None
        if err is not None and not math.isfinite(err):
            iv, err = None, None
        points.append(SmilePoint(theta=theta, z=z, k=float(k), iv=iv,
                                 source=Source.MONTE_CARLO, stderr=err))
    return points


def mc_smile(params: RoughBergomiParams, cfg: MCConfig, theta: float, z_grid) -> list[SmilePoint]:
    """Implied volatilities on ``z_grid`` with delta-method standard errors.

    Points whose value is not strictly inside the no-arbitrage range (for
    instance an OTM value that underflowed to 0) get ``iv=None``.
    """
    z_arr = np.atleast_1d(np.asarray(z_grid, dtype=float))
    return smile_from_samples(path_samples(params, cfg, theta, math.sqrt(theta) * z_arr))


def _skew_digital(theta, samples: PathSamples) -> tuple[float, float]:
    sqrt_theta = math.sqrt(theta)
    put = samples.put[:, 0]
    dig = samples.digital[:, 0]
    p_bar, d_bar = put.mean(), dig.mean()
    sigma = bs.implied_vol(theta, 0.0, float(p_bar))
    _, f2 = bs.bs_derivative_terms(0.0, theta, sigma)
    phi = norm_pdf(f2)
    gap = d_bar - norm_cdf(f2)
    skew = gap / (sqrt_theta * phi)
    # Delta method on (digital, put): d skew/d f2 and d f2/d sigma = sqrt(theta)/2.
    dskew_df2 = -1.0 / sqrt_theta + gap * f2 / (sqrt_theta * phi)
    dskew_dput = dskew_df2 * 0.5 * sqrt_theta / bs.vega(theta, 0.0, sigma)
    infl = (dig - d_bar) / (sqrt_theta * phi) + dskew_dput * (put - p_bar)
    return float(skew), float(infl.std(ddof=1) / math.sqrt(infl.size))


def _skew_fd(theta, samples: PathSamples, h: float) -> tuple[float, float]:
    zs = samples.k / math.sqrt(theta)
    lo, hi = samples.otm[:, 0], samples.otm[:, -1]
    iv_lo = bs.implied_vol_otm(theta, float(zs[0]), float(lo.mean()))
    iv_hi = bs.implied_vol_otm(theta, float(zs[-1]), float(hi.mean()))
    skew = (iv_hi - iv_lo) / (2.0 * h)
    infl = (hi / bs.vega(theta, float(zs[-1]), iv_hi)
            - lo / bs.vega(theta, float(zs[0]), iv_lo)) / (2.0 * h)
    return float(skew), float(infl.std(ddof=1) / math.sqrt(infl.size))


def mc_atm_skew(params: RoughBergomiParams, cfg: MCConfig, theta: float, h: float | None = None,
                method: str = "digital") -> tuple[float, float]:
    """At-the-money skew d sigma_BS / dk at k = 0 with a delta-method standard error.

    ``method="digital"`` uses the identity
    ``skew = (Q(k >= sigma0 X) - Phi(f2)) / (sqrt(theta) phi(f2))``
    with the Monte Carlo digital and ATM implied vol; ``method="fd"`` takes a
    central difference of two implied vols at ``k = +-h`` (default
    ``h = 0.1 * sigma0``) on common random numbers.
    """
    if method == "digital":
        samples = path_samples(params, cfg, theta, [0.0])
        return _skew_digital(theta, samples)
    if method == "fd":
        if h is None:
            h = 0.1 * curve_sigma0(params.curve, theta)
        samples = path_samples(params, cfg, theta, [-h, h])
        return _skew_fd(theta, samples, h)
    raise DomainError(f"unknown skew method {method!r}")
