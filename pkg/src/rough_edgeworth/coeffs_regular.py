"""Expansion coefficients for regular Markov stochastic-volatility models (H = 1/2).

The variance is ``v(X_t)`` with ``dX = b(X) dt + c(X) dW``.  Writing
``f = sqrt(v)`` and ``g = f' c``, the coefficients only need point values at
the spot state ``X_0``:

    kappa3 = rho/2 * g/f
    kappa4 = (g' c / f) rho^2 / 6 + (g/f)^2 (1 + 2 rho^2) / 6
    kappa2 = f + Lv / (4 f) * theta        (optional first-order correction)

Presets do the calculus for three common models by hand.

Presets are restricted to states where ``v`` is smooth and bounded away from
zero at ``X_0``; the regularity needed for the expansion is not checked beyond
that.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DomainError
from .expansion import ExpansionCoefficients


@dataclass(frozen=True)
class RegularSVInputs:
    """Point evaluations at ``X_0``.

    f0 : spot volatility sqrt(v(X_0))
    g0 : f'(X_0) c(X_0)
    gprime_c0 : g'(X_0) c(X_0)
    rho : spot/vol correlation
    Lv0 : generator applied to v at X_0; None disables the kappa2 correction
    eta_eff : standard deviation rate of log-variance, used only for the
        regime diagnostic (eta * theta**H with H = 1/2)
    """

    f0: float
    g0: float
    gprime_c0: float
    rho: float
    Lv0: float | None = None
    eta_eff: float | None = None

    def __post_init__(self):
        if not self.f0 > 0:
            raise DomainError(f"spot volatility f0 must be positive, got {self.f0}")
        if not -1.0 < self.rho < 1.0:
            raise DomainError(f"rho must lie in (-1, 1), got {self.rho}")


def regular_kappa3(m: RegularSVInputs) -> float:
    return 0.5 * m.rho * m.g0 / m.f0


def regular_kappa4(m: RegularSVInputs) -> float:
    r2 = m.rho * m.rho
    ratio = m.g0 / m.f0
    return m.gprime_c0 / m.f0 * r2 / 6.0 + ratio * ratio * (1.0 + 2.0 * r2) / 6.0


def regular_kappa2(m: RegularSVInputs, theta: float) -> float:
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta}")
    if m.Lv0 is None:
        return m.f0
    return m.f0 + 0.25 * m.Lv0 / m.f0 * theta


def regular_coefficients(m: RegularSVInputs, theta: float,
                         kappa2_correction: bool = False) -> ExpansionCoefficients:
    """Assemble coefficients; the O(theta) kappa2 correction is opt-in."""
    kappa2 = regular_kappa2(m, theta) if kappa2_correction else m.f0
    eta_th = None if m.eta_eff is None else m.eta_eff * math.sqrt(theta)
    return ExpansionCoefficients.from_kappa2(
        theta, 0.5, kappa2, regular_kappa3(m), regular_kappa4(m),
        eta_theta_h=eta_th, regime_warning=bool(eta_th is not None and eta_th >= 1.0),
    )


class Preset(enum.Enum):
    HESTON = "heston"
    LOGNORMAL_SABR = "lognormal_sabr"
    LOGNORMAL_VARIANCE = "lognormal_variance"


def heston(v0: float, kappa: float, theta_bar: float, xi: float, rho: float) -> RegularSVInputs:
    """``dv = kappa (theta_bar - v) dt + xi sqrt(v) dW``; state X = v.

    f = sqrt(x), c = xi sqrt(x) so g = xi/2 is constant and g' = 0.
    """
    if not v0 > 0:
        raise DomainError(f"spot variance must be positive, got {v0}")
    if xi < 0 or kappa < 0 or theta_bar < 0:
        raise DomainError("Heston kappa, theta_bar and xi must be nonnegative")
    f0 = math.sqrt(v0)
    return RegularSVInputs(f0=f0, g0=0.5 * xi, gprime_c0=0.0, rho=rho,
                           Lv0=kappa * (theta_bar - v0), eta_eff=xi / f0)


def lognormal_sabr(alpha0: float, nu: float, rho: float) -> RegularSVInputs:
    """SABR with beta = 1: ``d alpha = nu alpha dW``, v = alpha^2; state X = alpha.

    f = x, c = nu x, g = nu x, g' c = nu^2 x and L(x^2) = nu^2 x^2.
    """
    if not alpha0 > 0:
        raise DomainError(f"initial volatility must be positive, got {alpha0}")
    if nu < 0:
        raise DomainError(f"vol-of-vol must be nonnegative, got {nu}")
    return RegularSVInputs(f0=alpha0, g0=nu * alpha0, gprime_c0=nu * nu * alpha0, rho=rho,
                           Lv0=nu * nu * alpha0 * alpha0, eta_eff=2.0 * nu)


def lognormal_variance(v0: float, eta: float, rho: float) -> RegularSVInputs:
    """``v = exp(X)``, ``dX = -eta^2/2 dt + eta dW`` (E[v_t] = v0 is flat).

    f = e^{x/2}, g = eta/2 e^{x/2}, g' c = eta^2/4 e^{x/2}, Lv = 0.  This is
    the rough Bergomi model at H = 1/2 with a flat forward variance curve.
    """
    if not v0 > 0:
        raise DomainError(f"spot variance must be positive, got {v0}")
    if eta < 0:
        raise DomainError(f"eta must be nonnegative, got {eta}")
    f0 = math.sqrt(v0)
    return RegularSVInputs(f0=f0, g0=0.5 * eta * f0, gprime_c0=0.25 * eta * eta * f0,
                           rho=rho, Lv0=0.0, eta_eff=eta)


def preset(name: Preset | str, **params) -> RegularSVInputs:
    """Build :class:`RegularSVInputs` for a named model from its parameters."""
    name = Preset(name)
    builders = {
        Preset.HESTON: heston,
        Preset.LOGNORMAL_SABR: lognormal_sabr,
        Preset.LOGNORMAL_VARIANCE: lognormal_variance,
    }
    try:
        return builders[name](**params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for preset {name.value}: {exc}") from None
