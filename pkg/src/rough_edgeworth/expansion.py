"""Second-order small-time expansions driven by (sigma0, kappa3, kappa4).

Two moneyness conventions appear below and are never mixed silently:

* :func:`density_q` and :func:`put_price_expansion` take ``z`` with
  ``k = sigma0 * z`` and return a price normalized by ``F e^{-r theta} sigma0``;
* :func:`implied_vol_expansion` and every public smile takes ``z`` with
  ``k = sqrt(theta) * z``.

Use :func:`price_to_sqrt_theta` / :func:`blackscholes.convert_z` to move
between them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ExpansionDomainError
from .quadrature import adaptive_gauss_legendre
from .specfun import hermite, norm_cdf, norm_pdf


@dataclass(frozen=True)
class ExpansionCoefficients:
    """Everything the expansion formulas need at one maturity.

    ``kappa2 = sigma0 / sqrt(theta)`` is enforced to 1e-12 relative.
    ``eta_theta_h`` and ``regime_warning`` are filled in by model-specific
    constructors that know the vol-of-vol; they are informational.
    """

    theta: float
    H: float
    sigma0: float
    kappa2: float
    kappa3: float
    kappa4: float
    eta_theta_h: float | None = field(default=None, compare=False)
    regime_warning: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not self.theta > 0:
            raise DomainError(f"theta must be positive, got {self.theta}")
        if not 0 < self.H <= 0.5:
            raise DomainError(f"H must lie in (0, 1/2], got {self.H}")
        if not self.sigma0 > 0:
            raise DomainError(f"sigma0 must be positive, got {self.sigma0}")
        expected = self.kappa2 * math.sqrt(self.theta)
        if abs(expected - self.sigma0) > 1e-12 * self.sigma0:
            raise DomainError(
                f"sigma0={self.sigma0!r} inconsistent with kappa2*sqrt(theta)={expected!r}"
            )

    @classmethod
    def from_kappa2(cls, theta: float, H: float, kappa2: float, kappa3: float,
                    kappa4: float, **kw) -> "ExpansionCoefficients":
        return cls(theta=theta, H=H, sigma0=kappa2 * math.sqrt(theta), kappa2=kappa2,
                   kappa3=kappa3, kappa4=kappa4, **kw)

    @property
    def th_h(self) -> float:
        return self.theta ** self.H


class Source(enum.Enum):
    EXPANSION = "expansion"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class SmilePoint:
    """One implied-volatility point at ``k = sqrt(theta) * z``.

    ``iv`` is None when the point is unavailable (price outside the
    no-arbitrage range, or the expansion left its domain).
    """

    theta: float
    z: float
    k: float
    iv: float | None
    source: Source
    stderr: float | None = None

    def __post_init__(self):
        if self.iv is not None and not self.iv > 0:
            raise DomainError(f"implied volatility must be positive, got {self.iv}")
        if abs(self.k - math.sqrt(self.theta) * self.z) > 1e-12 * max(1.0, abs(self.k)):
            raise DomainError("k must equal sqrt(theta) * z")


def density_q(c: ExpansionCoefficients, x):
    """Second-order expansion of the density of the normalized log-price."""
    x = np.asarray(x, dtype=float)
    s0, th = c.sigma0, c.th_h
    y = x + 0.5 * s0
    first = norm_pdf(y) * (1.0 + c.kappa3 * (hermite(3, y) - s0 * hermite(2, y)) * th)
    second = norm_pdf(x) * (c.kappa4 * hermite(4, x) + 0.5 * c.kappa3**2 * hermite(6, x)) * th * th
    out = first + second
    return out if np.ndim(out) else float(out)


def density_q_terms(c: ExpansionCoefficients, x):
    """The density split as (leading, theta^H term, theta^{2H} term)."""
    x = np.asarray(x, dtype=float)
    s0, th = c.sigma0, c.th_h
    y = x + 0.5 * s0
    lead = norm_pdf(y)
    order1 = norm_pdf(y) * c.kappa3 * (hermite(3, y) - s0 * hermite(2, y)) * th
    order2 = norm_pdf(x) * (c.kappa4 * hermite(4, x) + 0.5 * c.kappa3**2 * hermite(6, x)) * th * th
    return lead, order1, order2


def put_price_expansion(c: ExpansionCoefficients, z):
    """Put price divided by ``F e^{-r theta} sigma0`` at strike ``F e^{sigma0 z}``."""
    z = np.asarray(z, dtype=float)
    s0, th = c.sigma0, c.th_h
    zp = z + 0.5 * s0
    ez = np.exp(s0 * z)
    lead = (norm_cdf(zp) * ez - norm_cdf(z - 0.5 * s0)) / s0
    order1 = c.kappa3 * norm_pdf(zp) * hermite(1, zp) * ez * th
    order2 = norm_pdf(z) * (c.kappa4 * hermite(2, z) + 0.5 * c.kappa3**2 * hermite(4, z)) * th * th
    out = lead + order1 + order2
    return out if np.ndim(out) else float(out)


def price_to_sqrt_theta(c: ExpansionCoefficients, price_sigma0_units):
    """Rescale a sigma0-normalized price to the sqrt(theta) normalization."""
    return np.asarray(price_sigma0_units) * c.kappa2


def implied_vol_expansion(c: ExpansionCoefficients, z: float) -> float:
    """Second-order implied volatility at ``k = sqrt(theta) * z``."""
    k2, k3, k4, th = c.kappa2, c.kappa3, c.kappa4, c.th_h
    w = z / k2
    iv = k2 * (
        1.0
        + k3 * (w + 0.5 * k2 * math.sqrt(c.theta)) * th
        + (1.5 * k3 * k3 - k4 + (k4 - 3.0 * k3 * k3) * w * w) * th * th
    )
    if not iv > 0:
        raise ExpansionDomainError(
            f"implied-vol expansion is {iv:.6g} <= 0 at theta={c.theta}, z={z}: "
            "maturity too large for the small-time regime"
        )
    return iv


def atm_skew(c: ExpansionCoefficients) -> float:
    return c.kappa3 * c.theta ** (c.H - 0.5)


def atm_curvature(c: ExpansionCoefficients) -> float:
    return 2.0 * (c.kappa4 - 3.0 * c.kappa3**2) / c.kappa2 * c.theta ** (2.0 * c.H - 1.0)


def atm_digital(c: ExpansionCoefficients) -> float:
    """Probability that the normalized log-price ends at or below zero."""
    h = 0.5 * c.sigma0
    return norm_cdf(h) + c.kappa3 * norm_pdf(h) * c.th_h


def atm_density(c: ExpansionCoefficients) -> float:
    h = 0.5 * c.sigma0
    th = c.th_h
    return norm_pdf(h) * (
        1.0 - 0.5 * c.kappa3 * c.sigma0 * th + (3.0 * c.kappa4 - 7.5 * c.kappa3**2) * th * th
    )


def density_normalization(c: ExpansionCoefficients, half_width: float = 40.0) -> float:
    """Numerical integral of :func:`density_q` over the real line.

    The density is a Gaussian times a polynomial, so truncating at
    ``+-half_width`` standard units loses nothing at double precision.
    """
    value, _ = adaptive_gauss_legendre(lambda x: density_q(c, x),
                                       [-half_width, -0.5 * c.sigma0, half_width], rel_tol=1e-13)
    return value
