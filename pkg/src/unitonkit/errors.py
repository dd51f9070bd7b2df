"""Exception hierarchy shared by all unitonkit modules."""


class UnitonError(Exception):
    """Base class for every error raised by unitonkit."""


class DivisionByZeroFunction(UnitonError, ZeroDivisionError):
    pass


class PoleAtPoint(UnitonError, ArithmeticError):
    pass


class SingularMatrixFunction(UnitonError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class DimensionMismatch(UnitonError, ValueError):
    pass


class EvalAtZeroWithNegativePowers(UnitonError, ZeroDivisionError):
    pass


class NonUnitaryLoop(UnitonError):
    pass


class ZeroVector(UnitonError, ValueError):
    pass


class NonUnitarySample(UnitonError):
    pass


class UnboundedDensity(UnitonError):
    pass


class PoleOnCircle(UnitonError):
    pass


class IllConditioned(UnitonError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class NonzeroIndicesWhenForbidden(UnitonError):
    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class NonTrivialIndices(UnitonError):
    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class RankDeficient(UnitonError):
    pass


class ValidationFailed(UnitonError):
    def __init__(self, message, error=None):
        super().__init__(message)
        self.error = error


class SingularFrame(UnitonError):
    pass


class GoldenMismatch(UnitonError):
    """The printed golden matrix and the frame-regenerated one disagree.

    ``diffs`` is a list of ``(k, row, col, printed, regenerated)`` tuples.
    """

    def __init__(self, message, diffs=()):
        super().__init__(message)
        self.diffs = list(diffs)


class ParseError(UnitonError, ValueError):
    pass
