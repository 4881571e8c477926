"""Exception hierarchy shared across the package."""


class MarError(Exception):
    """Base class for all errors raised by mar_kit."""


class DimensionError(MarError, ValueError):
    """Array shapes do not conform."""


class NumericError(MarError, ArithmeticError):
    """A factorization or solve failed, or a matrix is numerically singular."""


class PreconditionError(MarError, ValueError):
    """An operation was called on inputs outside its domain."""


class RankDeficiencyError(NumericError):
    """The VAR(1) design matrix is rank deficient."""


class DataError(MarError, ValueError):
    """Malformed input data (parse errors, incomplete grids, duplicates)."""
