"""Exception types raised by the package."""


class InvalidArgumentError(ValueError):
    """Bad shapes, out-of-range indices or otherwise malformed inputs."""


class EnumerationLimitError(ValueError):
    """Exact enumeration was requested for more nodes than supported."""


class NumericError(ArithmeticError):
    """A matrix factorization failed or a value became non-finite."""

    def __init__(self, message, time_index=None):
        super().__init__(message)
        self.time_index = time_index

    def __str__(self):
        msg = super().__str__()
        if self.time_index is not None:
            msg = f"{msg} (t={self.time_index})"
        return msg


class DegenerateColumnError(NumericError):
    """A graph column has zero variance and cannot be rescaled."""

    def __init__(self, column, time_index=None):
        super().__init__(f"graph column {column} has zero variance", time_index)
        self.column = column


class ConvergenceError(NumericError):
    """Newton-Raphson did not reach the gradient tolerance.

    ``last_iterate`` holds the final parameter vector so callers can inspect it.
    """

    def __init__(self, message, last_iterate=None, time_index=None):
        super().__init__(message, time_index)
        self.last_iterate = last_iterate


class EmptyRasterError(InvalidArgumentError):
    """No events fell inside the requested time range."""
