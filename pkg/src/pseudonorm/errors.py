"""Exception hierarchy shared by every pseudonorm module."""


class PseudonormError(Exception):
    """Base class for all package errors."""


class NoBracket(PseudonormError, ValueError):
    """A monotone root could not be bracketed inside the search horizon."""


class NotMonotone(PseudonormError, ValueError):
    """Sampled values decreased where monotone increase was required."""


class DerivativeNonpositive(PseudonormError, ValueError):
    pass


class LimitUnavailable(PseudonormError, ValueError):
    """The derivative ratio V1'/V2' has not settled to a limit."""


class BetaMissing(PseudonormError, ValueError):
    pass


class NoConvergence(PseudonormError, RuntimeError):
    """An iterative eigen/singular value solve hit its iteration cap."""


class NotConverged(PseudonormError, RuntimeError):
    """A refinement ladder stopped at its cap; ``result`` holds the best value."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class MuNonpositive(PseudonormError, ValueError):
    pass


class OutOfDomain(PseudonormError, ValueError):
    pass


class Inconclusive(PseudonormError, RuntimeError):
    pass


class LogDomain(PseudonormError, ValueError):
    pass


class QuadratureFailure(PseudonormError, RuntimeError):
    pass


class HorizonTooSmall(PseudonormError, ValueError):
    pass


class OutOfTable(PseudonormError, ValueError):
    pass


class ConfigError(PseudonormError, ValueError):
    pass


class ScenarioUnknown(PseudonormError, KeyError):
    pass


class AssumptionsFailed(PseudonormError, ValueError):
    """Sampled growth assumptions do not hold and no override was given."""
