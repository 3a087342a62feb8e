"""Exception types shared across the package."""


class DiagsumError(Exception):
    """Base class for all package errors."""


class ShapeError(DiagsumError, ValueError):
    """Matrix or index-set dimensions are inconsistent."""


class DomainError(DiagsumError, ValueError):
    """A value lies outside the domain the computation is defined on."""


class CapacityError(DiagsumError):
    """Exact computation requested beyond the configured size cap."""


class PreconditionError(DiagsumError, ValueError):
    """An operation was called outside its stated preconditions."""


class NumericalError(DiagsumError, ArithmeticError):
    """Round-off exceeded what the algorithm can absorb (indicates a bug)."""
