"""Expansion coefficients for the rough Bergomi model.

    v_t = v0(t) exp(eta sqrt(2H) int_0^t (t-s)^{H-1/2} dW_s - eta^2 t^{2H} / 2)

The forward variance curve v0 is piecewise constant, so the singular
fractional integral inside kappa3 is evaluated exactly segment by segment and
only the (continuous) outer integral is done numerically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, RegimeWarning
from .expansion import ExpansionCoefficients
from .quadrature import adaptive_gauss_legendre
from .specfun import beta_fn


@dataclass(frozen=True)
class ForwardVarianceCurve:
    """Piecewise-constant forward variance.

    ``breakpoints[i]`` starts the piece carrying ``values[i]``; the first
    breakpoint is 0 and the last value extends to infinity.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]
    _t: np.ndarray = field(init=False, repr=False, compare=False)
    _v: np.ndarray = field(init=False, repr=False, compare=False)

    def __init__(self, breakpoints: Sequence[float], values: Sequence[float]):
        t = np.asarray(breakpoints, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.size == 0 or t.shape != v.shape:
            raise DomainError("breakpoints and values must be nonempty 1-d sequences of equal length")
        if t[0] != 0.0:
            raise DomainError(f"first breakpoint must be 0, got {t[0]}")
        if np.any(np.diff(t) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise DomainError("forward variances must be positive and finite")
        object.__setattr__(self, "breakpoints", tuple(float(x) for x in t))
        object.__setattr__(self, "values", tuple(float(x) for x in v))
        object.__setattr__(self, "_t", t)
        object.__setattr__(self, "_v", v)

    @classmethod
    def flat(cls, v0: float) -> "ForwardVarianceCurve":
        return cls([0.0], [v0])

    @property
    def is_flat(self) -> bool:
        return len(set(self.values)) == 1

    def scaled(self, factor: float) -> "ForwardVarianceCurve":
        return ForwardVarianceCurve(self.breakpoints, [factor * v for v in self.values])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("forward variance is defined for t >= 0 only")
        idx = np.searchsorted(self._t, t, side="right") - 1
        out = self._v[idx]
        return out if out.ndim else float(out)

    def _pieces(self, upto: float):
        """Yield (start, end, value) for the pieces intersecting [0, upto]."""
        t, v = self._t, self._v
        for i in range(t.size):
            a = t[i]
            if a >= upto:
                break
            b = t[i + 1] if i + 1 < t.size else math.inf
            yield a, min(b, upto), v[i]

    def integral(self, a: float, b: float) -> float:
        """Exact integral of v0 over [a, b]."""
        if b < a:
            raise DomainError("integration bounds reversed")
        total = 0.0
        for lo, hi, val in self._pieces(b):
            lo = max(lo, a)
            if hi > lo:
                total += val * (hi - lo)
        return total

    def breakpoints_in(self, a: float, b: float) -> np.ndarray:
        inner = self._t[(self._t > a) & (self._t < b)]
        return np.concatenate([[a], inner, [b]])

    def fractional_sqrt_integral(self, t, H: float):
        """Exact ``int_0^t (t-s)^{H-1/2} sqrt(v0(s)) ds`` for scalar or array ``t``."""
        t = np.asarray(t, dtype=float)
        p = H + 0.5
        out = np.zeros_like(t)
        tmax = float(np.max(t)) if t.size else 0.0
        for a, b, val in self._pieces(tmax):
            lo = np.clip(t - a, 0.0, None)
            hi = np.clip(t - b, 0.0, None) if math.isfinite(b) else 0.0
            out += math.sqrt(val) * (lo**p - hi**p)
        return out / p


@dataclass(frozen=True)
class RoughBergomiParams:
    H: float
    eta: float
    rho: float
    curve: ForwardVarianceCurve

    def __post_init__(self):
        if not 0.0 < self.H <= 0.5:
            raise DomainError(f"H must lie in (0, 1/2], got {self.H}")
        if self.eta < 0:
            raise DomainError(f"eta must be nonnegative, got {self.eta}")
        if not -1.0 < self.rho < 1.0:
            raise DomainError(f"rho must lie in (-1, 1), got {self.rho}")

    @classmethod
    def flat(cls, H: float, eta: float, rho: float, v0: float) -> "RoughBergomiParams":
        return cls(H=H, eta=eta, rho=rho, curve=ForwardVarianceCurve.flat(v0))


def sigma0(curve: ForwardVarianceCurve, theta: float) -> float:
    """Total standard deviation sqrt(int_0^theta v0)."""
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta}")
    return math.sqrt(curve.integral(0.0, theta))


def _kappa3_integral(params: RoughBergomiParams, theta: float, damped: bool,
                     rel_tol: float) -> float:
    curve, H = params.curve, params.H
    eta2 = params.eta**2

    def integrand(t):
        out = curve.fractional_sqrt_integral(t, H) * curve(t)
        if damped:
            out = out * np.exp(-eta2 * t ** (2.0 * H) / 8.0)
        return out

    value, _ = adaptive_gauss_legendre(integrand, curve.breakpoints_in(0.0, theta),
                                       rel_tol=rel_tol)
    return value


def _kappa3(params: RoughBergomiParams, theta: float, damped: bool, rel_tol: float) -> float:
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta}")
    if params.rho == 0.0 or params.eta == 0.0:
        return 0.0
    s0 = sigma0(params.curve, theta)
    scale = params.rho * params.eta * math.sqrt(0.5 * params.H) / (theta**params.H * s0**3)
    return scale * _kappa3_integral(params, theta, damped, rel_tol)


def kappa3(params: RoughBergomiParams, theta: float, rel_tol: float = 1e-10) -> float:
    """Skew coefficient for an arbitrary piecewise-constant curve."""
    return _kappa3(params, theta, False, rel_tol)


def kappa3_damped(params: RoughBergomiParams, theta: float, rel_tol: float = 1e-10) -> float:
    """kappa3 with the exp(-eta^2 t^{2H} / 8) weight kept inside the outer integral.

    Diagnostic only: it differs from :func:`kappa3` by a term that vanishes
    with theta and measures how far the small-time limit is.
    """
    return _kappa3(params, theta, True, rel_tol)


def kappa3_flat(H: float, eta: float, rho: float) -> float:
    """Closed-form kappa3 for a flat curve (independent of theta and of the level)."""
    return rho * eta * math.sqrt(2.0 * H) / (2.0 * (H + 0.5) * (H + 1.5))


def kappa4(H: float, eta: float, rho: float) -> float:
    """Curvature coefficient; independent of theta and of the curve."""
    e2, r2 = eta * eta, rho * rho
    first = (1.0 + 2.0 * r2) * e2 * H / ((2.0 * H + 1.0) ** 2 * (2.0 * H + 2.0))
    second = r2 * e2 * H * beta_fn(H + 1.5, H + 1.5) / (2.0 * (H + 0.5) ** 2)
    return first + second


def eta_theta_h(params: RoughBergomiParams, theta: float) -> float:
    """Standard deviation of log spot variance at theta; >= 1 flags the regime warning."""
    return params.eta * theta**params.H


def coefficients(params: RoughBergomiParams, theta: float, *, warn: bool = True,
                 rel_tol: float = 1e-10) -> ExpansionCoefficients:
    s0 = sigma0(params.curve, theta)
    ind = eta_theta_h(params, theta)
    flag = ind >= 1.0
    if flag and warn:
        warnings.warn(
            f"eta*theta^H = {ind:.3f} >= 1 at theta={theta}: expansion accuracy is doubtful",
            RegimeWarning, stacklevel=2,
        )
    return ExpansionCoefficients(
        theta=theta, H=params.H, sigma0=s0, kappa2=s0 / math.sqrt(theta),
        kappa3=kappa3(params, theta, rel_tol), kappa4=kappa4(params.H, params.eta, params.rho),
        eta_theta_h=ind, regime_warning=flag,
    )
