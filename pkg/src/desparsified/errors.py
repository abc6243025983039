"""Exception types raised across the package."""


class NotPositiveDefinite(ValueError):
    """A matrix expected to be symmetric positive definite is not."""


class DimensionMismatch(ValueError):
    pass


class SparsityExceedsDim(ValueError):
    pass


class DegenerateNoise(ArithmeticError):
    """Nodewise residual variance fell below the floor (collinear design)."""


class NegativeVariance(ArithmeticError):
    pass


class InvalidLevel(ValueError):
    pass


class IndexOutOfRange(IndexError):
    pass


class ZeroGradient(ValueError):
    pass


class TooFewSamples(ValueError):
    pass


class ConfigParseError(ValueError):
    pass
