"""Exception types shared across the package."""


class RadfluxError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(RadfluxError, ValueError):
    pass


class EvaluationError(RadfluxError, ArithmeticError):
    """A user-supplied function returned a non-finite value.

    ``where`` holds the offending node, atom direction or point.
    """

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class GridMismatchError(RadfluxError, ValueError):
    pass


class GeometryError(RadfluxError, ValueError):
    pass
