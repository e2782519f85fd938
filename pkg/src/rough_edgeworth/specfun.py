"""Special functions: Hermite polynomials, the normal law and the beta function."""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import DomainError

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def hermite(k: int, x):
    """Probabilists' Hermite polynomial He_k evaluated at ``x``.

    Uses the three-term recurrence ``H_{n+1} = x H_n - n H_{n-1}``.
    Accepts scalars or arrays.
    """
    if k < 0:
        raise DomainError(f"Hermite degree must be nonnegative, got {k}")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if k == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = x.copy()
    for n in range(1, k):
        h_prev, h = h, x * h - n * h_prev
    return h if h.ndim else float(h)


def hermite_scaled(k: int, x, a: float):
    """Two-argument Hermite polynomial ``a**(k/2) * He_k(x / sqrt(a))``."""
    if not a > 0:
        raise DomainError(f"variance argument must be positive, got {a}")
    ra = math.sqrt(a)
    return a ** (k / 2.0) * hermite(k, np.asarray(x, dtype=float) / ra)


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return out if out.ndim else float(out)


def norm_cdf(x):
    # ndtr is erf/erfc based: accurate to a few ulps in both tails.
    out = special.ndtr(np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def beta_fn(a: float, b: float) -> float:
    """Beta function via log-gamma, safe for large arguments."""
    if not (a > 0 and b > 0):
        raise DomainError(f"beta function needs positive arguments, got ({a}, {b})")
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
