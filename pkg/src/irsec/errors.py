"""Exception hierarchy shared by all modules."""


class IrsecError(Exception):
    """Base class for every error raised by this package."""


class DomainError(IrsecError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DegeneracyError(DomainError):
    """Two gains coincide closely enough that a density cannot be built."""


class NumericalError(IrsecError, ArithmeticError):
    """A numerical procedure failed to meet its accuracy budget.

    Parameters
    ----------
    message : str
        Human readable diagnostic.
    partial : object, optional
        Best estimate available when the failure occurred.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConfigError(IrsecError, ValueError):
    """An experiment configuration is malformed or inconsistent."""
