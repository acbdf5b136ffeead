"""Exception hierarchy shared by every qfim module."""


class QfimError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(QfimError, ValueError):
    """An input violates a structural invariant (Hermiticity, trace, positivity).

    ``invariant`` names the violated property and ``magnitude`` carries the
    size of the violation so callers can decide whether to loosen tolerances.
    """

    def __init__(self, message, invariant=None, magnitude=None):
        super().__init__(message)
        self.invariant = invariant
        self.magnitude = magnitude


class DimensionError(QfimError, ValueError):
    pass


class DomainError(QfimError, ValueError):
    pass


class SingularityError(QfimError, ArithmeticError):
    """A linear system or density matrix is (numerically) singular."""

    def __init__(self, message, smallest_pivot=None):
        super().__init__(message)
        self.smallest_pivot = smallest_pivot


class DivergenceError(QfimError, ArithmeticError):
    pass


class ConvergenceError(QfimError, ArithmeticError):
    """An iterative limit failed to settle; ``history`` holds the iterates."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history if history is not None else []


class DiscontinuityWarning(UserWarning):
    """Emitted when the regularized limit and the spectral sum disagree at a
    rank-deficient point (removable discontinuity of the QFIM)."""
