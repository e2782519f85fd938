"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ArbitrageError(ValueError):
    """A price violates the no-arbitrage bounds of the normalized put.

    ``bound`` is ``"lower"`` or ``"upper"``.
    """

    def __init__(self, message: str, bound: str):
        super().__init__(message)
        self.bound = bound


class ExpansionDomainError(ArithmeticError):
    """The asymptotic implied-volatility expansion produced a nonpositive value.

    Raised instead of clamping: it signals that the maturity is too large for
    the small-time regime.
    """


class NumericalError(ArithmeticError):
    """A numerical routine failed to reach its target accuracy."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class EstimatorUnavailable(ValueError):
    """The requested Monte Carlo estimator is undefined for these parameters."""


class RegimeWarning(UserWarning):
    """eta * theta**H >= 1: the expansion is outside its practical accuracy regime."""


class DiscretizationWarning(UserWarning):
    """The simulation grid is coarse relative to the kernel singularity."""
