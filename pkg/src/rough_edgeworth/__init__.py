"""Small-maturity Edgeworth-type expansions of option prices and implied volatility
under rough and regular stochastic volatility, with Monte Carlo ground truth."""

from . import blackscholes, coeffs_rbergomi, coeffs_regular, expansion, specfun
from .errors import (
    ArbitrageError,
    DiscretizationWarning,
    DomainError,
    EstimatorUnavailable,
    ExpansionDomainError,
    NumericalError,
    RegimeWarning,
)

__version__ = "0.1.0"

__all__ = [
    "ArbitrageError", "DiscretizationWarning", "DomainError", "EstimatorUnavailable",
    "ExpansionDomainError", "NumericalError", "RegimeWarning",
    "blackscholes", "coeffs_rbergomi", "coeffs_regular", "expansion", "specfun",
]
