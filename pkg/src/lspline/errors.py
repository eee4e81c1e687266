"""Exception hierarchy shared by the library and the CLI."""


class LSplineError(Exception):
    """Base class for all errors raised by :mod:`lspline`."""


class DomainError(LSplineError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ConditionViolation(DomainError):
    """A knot step does not respect the step bound ``h < delta``."""

    def __init__(self, message, *, delta=None, step=None, index=None):
        super().__init__(message)
        self.delta = delta
        self.step = step
        self.index = index


class NumericalError(LSplineError, ArithmeticError):
    """Evaluation broke down numerically (underflow, loss of realness, ...)."""


class SingularPivot(NumericalError):
    """Unpivoted tridiagonal elimination met a vanishing pivot."""

    def __init__(self, message, *, row=None):
        super().__init__(message)
        self.row = row


class SingularSystem(NumericalError):
    """A dense system is numerically rank deficient."""


class ZeroDiagonal(NumericalError):
    """A tridiagonal matrix has an exactly vanishing diagonal entry."""
