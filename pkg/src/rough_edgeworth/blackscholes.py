"""Black-Scholes put pricing in normalized small-time coordinates.

Prices are normalized by forward, discount factor and sqrt(theta): with
log-moneyness ``k = sqrt(theta) * z`` the normalized put is

    P_theta(sigma) = [Phi(z/sigma + sigma sqrt(theta)/2) e^k
                      - Phi(z/sigma - sigma sqrt(theta)/2)] / sqrt(theta)

which maps [0, inf] increasingly onto [(e^k - 1)_+, e^k] / sqrt(theta).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy import special

from .errors import ArbitrageError, DomainError, NumericalError
from .specfun import norm_pdf


class Moneyness(enum.Enum):
    """Which scale normalizes log-moneyness: ``k = scale * z``."""

    SQRT_THETA = "sqrt_theta"
    SIGMA0 = "sigma0"


def convert_z(z, sigma0: float, theta: float, src: Moneyness, dst: Moneyness):
    """Convert a normalized moneyness between the two conventions."""
    if src is dst:
        return z
    sqrt_theta = math.sqrt(theta)
    k = z * (sqrt_theta if src is Moneyness.SQRT_THETA else sigma0)
    return k / (sqrt_theta if dst is Moneyness.SQRT_THETA else sigma0)


@dataclass(frozen=True)
class NormalizedQuote:
    theta: float
    z: float
    value: float
    convention: Moneyness = Moneyness.SQRT_THETA

    def __post_init__(self):
        if not self.theta > 0:
            raise DomainError(f"theta must be positive, got {self.theta}")

    def log_moneyness(self, sigma0: float | None = None) -> float:
        if self.convention is Moneyness.SQRT_THETA:
            return math.sqrt(self.theta) * self.z
        if sigma0 is None:
            raise DomainError("sigma0 is required to read a sigma0-normalized quote")
        return sigma0 * self.z


def price_bounds(theta: float, z: float) -> tuple[float, float]:
    """Closed no-arbitrage range of the normalized put (values at sigma = 0 and inf)."""
    sqrt_theta = math.sqrt(theta)
    k = sqrt_theta * z
    return max(math.expm1(k), 0.0) / sqrt_theta, math.exp(k) / sqrt_theta


def _log_otm_value(theta: float, z: float, sigma: float) -> float:
    """log of the out-of-the-money option value (put if k <= 0, else call), normalized.

    Works in log space so that deep wings neither underflow nor cancel.
    """
    sqrt_theta = math.sqrt(theta)
    k = sqrt_theta * z
    half = 0.5 * sigma * sqrt_theta
    d_plus = z / sigma + half
    d_minus = z / sigma - half
    if k <= 0.0:
        # put = Phi(d-) * expm1(k + log Phi(d+) - log Phi(d-))
        lo_minus = special.log_ndtr(d_minus)
        delta = k + special.log_ndtr(d_plus) - lo_minus
        return lo_minus + math.log(math.expm1(delta)) - math.log(sqrt_theta)
    # call = Phi(-d-) * (-expm1(k + log Phi(-d+) - log Phi(-d-)))
    lo_minus = special.log_ndtr(-d_minus)
    delta = k + special.log_ndtr(-d_plus) - lo_minus
    return lo_minus + math.log(-math.expm1(delta)) - math.log(sqrt_theta)


def normalized_put(theta: float, z: float, sigma: float) -> float:
    """Normalized Black-Scholes put ``P_theta(sigma)`` at ``k = sqrt(theta) z``."""
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta}")
    if sigma < 0:
        raise DomainError(f"sigma must be nonnegative, got {sigma}")
    lower, upper = price_bounds(theta, z)
    if sigma == 0.0:
        return lower
    if math.isinf(sigma):
        return upper
    otm = math.exp(_log_otm_value(theta, z, sigma))
    return otm if z <= 0.0 else lower + otm


def vega(theta: float, z: float, sigma: float) -> float:
    """dP_theta/dsigma = phi(z/sigma - sigma sqrt(theta)/2)."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    return norm_pdf(z / sigma - 0.5 * sigma * math.sqrt(theta))


def implied_vol(theta: float, z: float, price: float, *, tol: float = 1e-12,
                max_iter: int = 200) -> float:
    """Invert :func:`normalized_put` in sigma.

    Bisection on a doubling bracket down to width 1e-3, then Newton steps on
    the log of the out-of-the-money value, falling back to bisection whenever a
    step leaves the bracket.
    """
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta}")
    lower, upper = price_bounds(theta, z)
    if not price > lower:
        raise ArbitrageError(
            f"price {price!r} is at or below the lower bound {lower!r} (intrinsic value)",
            bound="lower",
        )
    if not price < upper:
        raise ArbitrageError(
            f"price {price!r} is at or above the upper bound {upper!r}", bound="upper"
        )
    target = price if z <= 0.0 else price - lower
    if not target > 0.0:
        raise ArbitrageError(f"time value of {price!r} vanishes in floating point", "lower")
    s, width = _solve_log_otm(theta, z, math.log(target), max_iter)
    err = abs(normalized_put(theta, z, s) - price)
    if err > tol * max(1.0, price) and width > 1e-14 * s:
        raise NumericalError(f"implied volatility price residual {err:.3e}", achieved=err)
    return s


def implied_vol_otm(theta: float, z: float, otm_value: float, *, tol: float = 1e-12,
                    max_iter: int = 200) -> float:
    """Implied vol from the normalized out-of-the-money value (put if k <= 0, else call).

    Use this for deep wings, where the in-the-money put is intrinsic value to
    machine precision and carries no information about sigma.
    """
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta}")
    sqrt_theta = math.sqrt(theta)
    k = sqrt_theta * z
    upper = (math.exp(k) if k <= 0.0 else 1.0) / sqrt_theta
    if not otm_value > 0.0:
        raise ArbitrageError(f"out-of-the-money value {otm_value!r} is not positive", "lower")
    if not otm_value < upper:
        raise ArbitrageError(f"out-of-the-money value {otm_value!r} reaches its upper bound", "upper")
    log_target = math.log(otm_value)
    s, width = _solve_log_otm(theta, z, log_target, max_iter)
    err = abs(_log_otm_value(theta, z, s) - log_target)
    if err > tol * max(1.0, abs(log_target)) and width > 1e-14 * s:
        raise NumericalError(f"implied volatility log-price residual {err:.3e}", achieved=err)
    return s


def _solve_log_otm(theta: float, z: float, log_target: float, max_iter: int) -> tuple[float, float]:
    """Root of ``log OTM(sigma) = log_target``; returns (sigma, final bracket width)."""

    def resid(s: float) -> float:
        return _log_otm_value(theta, z, s) - log_target

    lo, hi = 0.0, 1.0
    while resid(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e8:
            raise NumericalError("could not bracket the implied volatility", achieved=hi)
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        if resid(mid) < 0.0:
            lo = mid
        else:
            hi = mid

    s = 0.5 * (lo + hi)
    for _ in range(max_iter):
        r = resid(s)
        if r == 0.0:
            return s, hi - lo
        if r < 0.0:
            lo = s
        else:
            hi = s
        otm = math.exp(_log_otm_value(theta, z, s))
        slope = vega(theta, z, s) / otm if otm > 0 else 0.0
        step = r / slope if slope > 0 else math.inf
        s_new = s - step
        if not lo < s_new < hi:
            s_new = 0.5 * (lo + hi)
        if abs(s_new - s) <= 1e-15 * s or hi - lo <= 4e-16 * s:
            return s_new, hi - lo
        s = s_new
    raise NumericalError("implied volatility iteration did not converge", achieved=hi - lo)


def bs_derivative_terms(k: float, theta: float, sigma: float) -> tuple[float, float]:
    """The pair (f1, f2) = k/(sqrt(theta) sigma) -/+ sqrt(theta) sigma / 2."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    sqrt_theta = math.sqrt(theta)
    a = k / (sqrt_theta * sigma)
    b = 0.5 * sqrt_theta * sigma
    return a - b, a + b
