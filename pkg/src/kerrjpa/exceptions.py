class KerrJPAError(Exception):
    """Base class for all errors raised by kerrjpa."""


class DomainError(KerrJPAError, ValueError):
    """An argument lies outside the domain of the model."""


class NumericalError(KerrJPAError, ArithmeticError):
    """A numerical procedure failed to meet its accuracy contract."""

    def __init__(self, message, residual=None, trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace


class BistableError(NumericalError):
    """The requested operating point lies in the bistable (hysteretic) region."""
