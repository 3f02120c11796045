class InfexError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgumentError(InfexError, ValueError):
    pass


class NumericDegeneracyError(InfexError, ArithmeticError):
    """A matrix that should be positive definite is no longer so."""


class DegenerateInstanceError(InfexError, ValueError):
    """The optimal arm is not unique."""


class InvalidInstanceError(InfexError, ValueError):
    pass


class UnsatisfiableError(InfexError, ValueError):
    pass
