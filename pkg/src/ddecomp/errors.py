"""Exception hierarchy shared by every ddecomp module."""


class DDecompError(Exception):
    """Base class for all package errors."""


class NumericalError(DDecompError):
    """A linear-algebra kernel could not produce a trustworthy result.

    ``iteration`` is filled in by the solver when the failure happens inside
    the alternating loop.
    """

    iteration = None

    def __str__(self):
        msg = super().__str__()
        if self.iteration is not None:
            msg = f"{msg} (iteration {self.iteration})"
        return msg


class NotPositiveDefinite(NumericalError):
    pass


class SingularOperator(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class DataError(DDecompError):
    """Invalid input data or arguments (bad shapes, ranks, masks...)."""


class ShapeMismatch(DataError):
    pass


class RankTooLarge(DataError):
    pass


class ZeroMatrix(DataError):
    pass


class EmptyMask(DataError):
    pass


class NotSymmetric(DataError):
    pass


class ZeroColumn(DataError):
    pass


class UnknownExample(DataError):
    pass


class NonFiniteEntry(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionMismatch(DataError):
    pass


class IoError(DDecompError):
    pass
