"""Exception hierarchy shared across the package."""


class SeagleError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(SeagleError, ValueError):
    """A scalar parameter is outside its admissible domain."""


class ShapeError(SeagleError, ValueError):
    """Array dimensions are inconsistent with the operation."""


class ConditioningError(SeagleError):
    """A matrix that must be positive definite failed its factorization."""


class RankError(SeagleError):
    """The covariate design is numerically rank deficient."""


class NumericalError(SeagleError):
    """Non-finite values or an unrecoverable numerical failure."""


class GenotypeError(SeagleError):
    """Genotype generation could not produce a usable matrix."""


class ParseError(SeagleError):
    """An input file failed to parse."""
