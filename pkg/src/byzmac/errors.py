"""Exception hierarchy shared by all byzmac modules."""


class ByzmacError(Exception):
    """Base class for every error raised by this package."""


class NotSquare(ByzmacError, ValueError):
    pass


class NotHermitian(ByzmacError, ValueError):
    pass


class NegativeEigenvalue(ByzmacError, ValueError):
    pass


class DimensionMismatch(ByzmacError, ValueError):
    pass


class DimensionCapExceeded(ByzmacError, ValueError):
    pass


class InvariantViolation(ByzmacError, ValueError):
    pass


class ZeroProbabilityBranch(ByzmacError, ValueError):
    """Raised when a posterior is requested for an outcome of (near) zero probability."""


class IncompletePovm(ByzmacError, ValueError):
    pass


class SymbolOutOfAlphabet(ByzmacError, ValueError):
    pass


class SlotOutOfRange(ByzmacError, IndexError):
    pass


class ParseError(ByzmacError, ValueError):
    pass


class WeightNotNormalized(ByzmacError, ValueError):
    pass


class DistributionError(ByzmacError, ValueError):
    pass


class BudgetExhausted(ByzmacError, RuntimeError):
    pass


class MissingStagePovm(ByzmacError, ValueError):
    pass


class KTooLarge(ByzmacError, ValueError):
    pass


class LengthMismatch(ByzmacError, ValueError):
    pass


class DegenerateEnsemble(ByzmacError, ValueError):
    pass
