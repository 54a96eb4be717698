"""Exception hierarchy.

Each class carries a ``category`` string used by the command-line front end
to report where a failure originated.
"""


class NanolaseError(Exception):
    category = "error"


class DomainError(NanolaseError, ValueError):
    """An argument lies outside the domain of the operation."""

    category = "domain"


class NumericError(NanolaseError, ArithmeticError):
    """NaN or infinity appeared in a state or derivative."""

    category = "numeric"


class StiffnessError(NumericError):
    """The integrator could not take a step without underflowing."""

    category = "stiffness"

    def __init__(self, message, state=None, t=None):
        super().__init__(message)
        self.state = state
        self.t = t


class ConvergenceError(NanolaseError):
    category = "convergence"


class ResolutionError(NanolaseError):
    """A trajectory is too coarsely sampled for the requested quadrature."""

    category = "resolution"


class NoThresholdError(NanolaseError):
    category = "no-threshold"


class UnboundedPulseError(NanolaseError):
    category = "unbounded-pulse"


class NoPulseError(NanolaseError):
    category = "no-pulse"


class UndefinedFractionError(NanolaseError, ZeroDivisionError):
    category = "undefined-fraction"


class AmbiguousFitError(NanolaseError):
    category = "ambiguous-fit"


class NoLasingError(NanolaseError):
    category = "no-lasing"


class ConfigError(NanolaseError):
    category = "config"
