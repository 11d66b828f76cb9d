"""Exception types. Every domain error derives from PgnError."""


class PgnError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class SumNonZero(PgnError):
    pass


class DimensionTooSmall(PgnError):
    pass


class SizeMismatch(PgnError):
    pass


class LevelOutOfRange(PgnError):
    pass


class NotNested(PgnError):
    pass


class NotSubmultiset(PgnError):
    pass


class IllegalFlip(PgnError):
    pass


class NotComparable(PgnError):
    pass


class LevelMismatch(PgnError):
    pass


class NotConcave(PgnError):
    pass


class NotLocallyConstant(PgnError):
    pass


class WindowMismatch(PgnError):
    pass


class DegenerateWindow(PgnError):
    pass


class TimeOutOfWindow(PgnError):
    pass


class TemplateFormatError(PgnError):
    pass


class DegreeBoundViolated(PgnError):
    pass


class Infeasible(PgnError):
    def __init__(self, msg, vertex=None, bound=None):
        super().__init__(msg)
        self.vertex = vertex
        self.bound = bound


class NotSignificantEnough(PgnError):
    pass


class ApproximationFailed(PgnError):
    pass


class InvalidSplit(PgnError):
    pass


class PreconditionViolated(PgnError):
    pass


class StandardWeights(PgnError):
    pass


class NoSignedWeights(PgnError):
    pass


class BadInterval(PgnError):
    pass


class WrongZeroBranch(PgnError):
    pass


class GapConditionFailed(PgnError):
    pass


class SingularBasis(PgnError):
    pass


class RankOutOfRange(PgnError):
    pass


class ExtractionAmbiguous(PgnError):
    pass
