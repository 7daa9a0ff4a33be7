"""Exception hierarchy.

The CLI maps :class:`DataError` to exit code 2 and :class:`NumericalError`
to exit code 3; anything else derived from :class:`SolarcastError` is a
usage error (exit code 1).
"""


class SolarcastError(Exception):
    """Base class for every error raised by this package."""


class DataError(SolarcastError, ValueError):
    """Input data violates a precondition of the pipeline."""


class NumericalError(SolarcastError, ArithmeticError):
    """A numerical routine failed or produced non-finite values."""


class MalformedRow(DataError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class NonMonotonicTimestamps(DataError):
    pass


class EmptyFile(DataError):
    pass


class EmptyResult(DataError):
    pass


class WrongResolution(DataError):
    pass


class DegenerateRange(DataError):
    pass


class InsufficientData(DataError):
    pass


class EmptySplit(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class NonFiniteInput(DataError):
    pass


class ZeroDenominator(DataError):
    pass


class ConstantVector(DataError):
    pass


class UntrainedModel(SolarcastError):
    pass


class NonFiniteEntries(NumericalError):
    pass


class NumericalFailure(NumericalError):
    pass


class DivergenceDetected(NumericalError):
    def __init__(self, epoch: int):
        super().__init__(f"weights became non-finite during epoch {epoch}")
        self.epoch = epoch
