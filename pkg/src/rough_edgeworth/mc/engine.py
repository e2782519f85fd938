"""Path generation for the rough Bergomi model: configuration, RNG streams, batching."""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, TypeVar

import numpy as np

from ..coeffs_rbergomi import RoughBergomiParams
from ..errors import DomainError
from .covariance import MAX_STEPS, GaussianFactorization, VolterraKernel, build_factorization

THREADS_ENV = "ROUGH_EDGEWORTH_THREADS"
BATCH_SIZE = 4096

T = TypeVar("T")


class Estimator(enum.Enum):
    EULER = "euler"
    CONDITIONAL_GAUSSIAN = "conditional_gaussian"


@dataclass(frozen=True)
class MCConfig:
    n_paths: int = 100_000
    n_steps: int = 256
    seed: int = 20240101
    estimator: Estimator = Estimator.CONDITIONAL_GAUSSIAN
    antithetic: bool = False

    def __post_init__(self):
        if self.n_paths < 1:
            raise DomainError(f"n_paths must be >= 1, got {self.n_paths}")
        if not 1 <= self.n_steps <= MAX_STEPS:
            raise DomainError(f"n_steps must lie in [1, {MAX_STEPS}], got {self.n_steps}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "estimator", Estimator(self.estimator))
        if self.antithetic and self.n_paths % 2:
            raise DomainError("antithetic sampling needs an even n_paths")


def batch_rng(seed: int, batch: int) -> np.random.Generator:
    """Counter-based Philox stream keyed by (seed, batch index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(batch,))))


def batch_sizes(n_paths: int) -> list[int]:
    full, rest = divmod(n_paths, BATCH_SIZE)
    return [BATCH_SIZE] * full + ([rest] if rest else [])


def n_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        n = int(raw)
    except ValueError:
        raise DomainError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return n if n > 0 else (os.cpu_count() or 1)


def map_batches(fn: Callable[[int, int], T], n_paths: int) -> list[T]:
    """Apply ``fn(batch_index, batch_size)`` to every batch; results in batch order.

    Batches are independent (own RNG substream), so the output does not depend
    on the thread count.
    """
    sizes = batch_sizes(n_paths)
    workers = min(n_threads(), len(sizes))
    if workers <= 1:
        return [fn(b, n) for b, n in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


def factorization_for(params: RoughBergomiParams, cfg: MCConfig, theta: float) -> GaussianFactorization:
    return build_factorization(VolterraKernel.rough_bergomi(params.H), cfg.n_steps, theta)


@dataclass
class PathBatch:
    """Simulated paths; node arrays have shape (n_paths, N) at t_1..t_N."""

    grid: np.ndarray
    dW: np.ndarray
    G: np.ndarray
    v: np.ndarray
    v_start: float
    antithetic: bool = False

    @property
    def v_left(self) -> np.ndarray:
        """Variance at the left end of every step: v_{t_0}, ..., v_{t_{N-1}}."""
        return np.concatenate([np.full((self.v.shape[0], 1), self.v_start), self.v[:, :-1]], axis=1)


def variance_from_driver(params: RoughBergomiParams, grid: np.ndarray, G: np.ndarray) -> np.ndarray:
    fwd = params.curve(grid)
    return fwd * np.exp(params.eta * G - 0.5 * params.eta**2 * grid ** (2.0 * params.H))


def generate_batch(params: RoughBergomiParams, cfg: MCConfig, theta: float,
                   batch: int, size: int) -> PathBatch:
    fact = factorization_for(params, cfg, theta)
    dW, G = fact.sample(batch_rng(cfg.seed, batch), size, cfg.antithetic)
    v = variance_from_driver(params, fact.grid, G)
    return PathBatch(grid=fact.grid, dW=dW, G=G, v=v, v_start=params.curve(0.0),
                     antithetic=cfg.antithetic)


def iter_path_batches(params: RoughBergomiParams, cfg: MCConfig, theta: float) -> Iterator[PathBatch]:
    for b, n in enumerate(batch_sizes(cfg.n_paths)):
        yield generate_batch(params, cfg, theta, b, n)


def simulate_variance_paths(params: RoughBergomiParams, cfg: MCConfig, theta: float) -> PathBatch:
    """All paths at once (memory ~ 24 * n_paths * n_steps bytes); deterministic in the seed."""
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta}")
    parts = list(iter_path_batches(params, cfg, theta))
    return PathBatch(
        grid=parts[0].grid,
        dW=np.concatenate([p.dW for p in parts]),
        G=np.concatenate([p.G for p in parts]),
        v=np.concatenate([p.v for p in parts]),
        v_start=parts[0].v_start,
        antithetic=cfg.antithetic,
    )


def pair_average(x: np.ndarray, antithetic: bool) -> np.ndarray:
    """Collapse antithetic pairs (first half mirrored by second half) to their means."""
    if not antithetic:
        return x
    half = x.shape[0] // 2
    return 0.5 * (x[:half] + x[half:])


def mean_and_stderr(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    if n < 2:
        return mean, np.full_like(mean, math.nan)
    se = samples.std(axis=0, ddof=1) / math.sqrt(n)
    # Identical samples: report exactly zero rather than summation round-off.
    return mean, np.where(np.ptp(samples, axis=0) == 0.0, 0.0, se)
