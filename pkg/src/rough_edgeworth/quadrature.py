"""Quadrature rules used by the coefficient and covariance code.

Node/weight generation is delegated to scipy; the adaptive strategies are
local.
"""

from __future__ import annotations

import heapq
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special

from .errors import NumericalError


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = special.roots_legendre(n)
    return x, w


@lru_cache(maxsize=None)
def gauss_jacobi(n: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on [-1, 1] for the weight (1 - x)^alpha (1 + x)^beta."""
    x, w = special.roots_jacobi(n, alpha, beta)
    return x, w


def _gl_panel(f, a: float, b: float, n: int) -> float:
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return half * float(np.dot(w, f(0.5 * (a + b) + half * x)))


def adaptive_gauss_legendre(f: Callable[[np.ndarray], np.ndarray], breakpoints,
                            rel_tol: float = 1e-10, n: int = 10,
                            max_panels: int = 20000) -> tuple[float, float]:
    """Integrate a vectorized ``f`` over consecutive ``breakpoints``.

    Panels are bisected greedily (largest error first); the error of a panel is
    the difference between the ``n``-point rule on it and on its two halves.
    Returns ``(value, error_estimate)``; raises :class:`NumericalError` if the
    tolerance is not met within ``max_panels``.
    """
    bp = np.asarray(breakpoints, dtype=float)
    heap: list[tuple[float, float, float, float]] = []
    total = 0.0
    err_total = 0.0

    def push(a, b, whole):
        nonlocal total, err_total
        m = 0.5 * (a + b)
        left, right = _gl_panel(f, a, m, n), _gl_panel(f, m, b, n)
        est = left + right
        err = abs(est - whole)
        total += est
        err_total += err
        heapq.heappush(heap, (-err, a, b, est))
        return left, right

    for a, b in zip(bp[:-1], bp[1:]):
        if b > a:
            push(a, b, _gl_panel(f, a, b, n))

    panels = len(heap)
    while heap and err_total > rel_tol * abs(total) and err_total > 1e-300:
        if panels >= max_panels:
            raise NumericalError(
                f"adaptive Gauss-Legendre stopped at {panels} panels, "
                f"relative error {err_total / max(abs(total), 1e-300):.3e}",
                achieved=err_total / max(abs(total), 1e-300),
            )
        neg_err, a, b, est = heapq.heappop(heap)
        total -= est
        err_total -= -neg_err
        m = 0.5 * (a + b)
        left = _gl_panel(f, a, m, n)
        right = _gl_panel(f, m, b, n)
        push(a, m, left)
        push(m, b, right)
        panels += 1
    # Recompute sums from the heap to shed accumulated cancellation.
    total = float(np.sum([h[3] for h in heap]))
    err_total = float(np.sum([-h[0] for h in heap]))
    return total, err_total
