"""Monte Carlo ground truth for the rough Bergomi model."""

from .appendix import (
    Identity,
    IdentityResult,
    analytic_coefficients,
    appendix_identity_check,
    check_identities,
    check_suite,
    discrete_coefficients,
    kernel_constant,
    kernel_power,
    kernel_zero,
)
from .covariance import (
    MAX_STEPS,
    GaussianFactorization,
    VolterraKernel,
    analytic_covariance,
    build_covariance,
    build_factorization,
)
from .engine import (
    BATCH_SIZE,
    THREADS_ENV,
    Estimator,
    MCConfig,
    PathBatch,
    simulate_variance_paths,
)
from .pricing import (
    PathSamples,
    mc_atm_skew,
    mc_smile,
    path_samples,
    price_put_conditional,
    price_put_euler,
    smile_from_samples,
)

__all__ = [
    "BATCH_SIZE", "MAX_STEPS", "THREADS_ENV",
    "Estimator", "GaussianFactorization", "Identity", "IdentityResult", "MCConfig",
    "PathBatch", "PathSamples", "VolterraKernel",
    "analytic_coefficients", "analytic_covariance", "appendix_identity_check",
    "build_covariance", "build_factorization", "check_identities", "check_suite",
    "discrete_coefficients", "kernel_constant", "kernel_power", "kernel_zero",
    "mc_atm_skew", "mc_smile", "path_samples", "price_put_conditional", "price_put_euler",
    "simulate_variance_paths", "smile_from_samples",
]
