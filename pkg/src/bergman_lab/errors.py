"""Exception hierarchy shared by all modules."""


class LabError(Exception):
    """Base class for all package errors."""


class DomainError(LabError, ValueError):
    """Argument outside the domain of a weight family or formula."""


class QuadratureError(LabError, RuntimeError):
    """Tolerance not met within the subdivision budget.

    Attributes
    ----------
    best : float
        Best available estimate (log-value where relevant).
    err : float
        Error estimate attached to ``best``.
    """

    def __init__(self, message, best=float("nan"), err=float("inf")):
        super().__init__(message)
        self.best = best
        self.err = err


class BracketError(LabError, RuntimeError):
    """A minimum or root could not be enclosed."""


class TruncationError(LabError, RuntimeError):
    """Series model too small for the requested radius."""


class ConvergenceError(LabError, RuntimeError):
    """Iterative refinement did not stabilise within budget."""


class MemoryBudgetError(LabError, MemoryError):
    """Dense assembly would exceed the configured memory budget."""


class ConfigError(LabError, ValueError):
    """Invalid experiment configuration."""
