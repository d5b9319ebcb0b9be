"""Exception hierarchy shared by the solver modules."""

from __future__ import annotations


class ChemoSteadyError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(ChemoSteadyError, ValueError):
    """Invalid geometry, resolution, parameter or config-file content."""


class SingularOperatorError(ChemoSteadyError):
    """The Robin operator has a constant nullspace (q and b both vanish)."""


class NumericalFailure(ChemoSteadyError):
    """A numerical routine did not reach its tolerance."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class NonConvergenceError(NumericalFailure):
    """Nonlinear iteration hit its cap; ``step_history`` holds the sup-norm steps."""

    def __init__(self, message: str, step_history, achieved: float | None = None):
        super().__init__(message, achieved)
        self.step_history = list(step_history)


class DiscretizationError(NumericalFailure):
    """A property the continuum solution has was violated on the grid."""


class BracketError(ChemoSteadyError):
    """A root bracket did not straddle the target."""

    def __init__(self, message: str, lower: float, upper: float):
        super().__init__(message)
        self.lower = lower
        self.upper = upper
