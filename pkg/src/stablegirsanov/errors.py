"""Exception types shared by the simulation and quadrature layers."""


class InvalidArgument(ValueError):
    """A parameter lies outside the documented domain of an operation."""


class InvariantViolation(RuntimeError):
    """A structural invariant failed at run time (e.g. 1 + F <= 0 along a path)."""


class NumericFailure(RuntimeError):
    """Quadrature did not reach the requested tolerance.

    The partial value and the error estimate are kept on the exception so that
    callers can still report them.
    """

    def __init__(self, message, partial=None, error=None):
        super().__init__(message)
        self.partial = partial
        self.error = error
