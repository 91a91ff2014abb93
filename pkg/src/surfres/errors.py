"""Typed errors shared across the package."""


class SurfresError(Exception):
    """Base class for all errors raised by this package."""


class SpecMismatch(SurfresError):
    """Operands live over different coefficient fields."""


class DivisionByZero(SurfresError, ZeroDivisionError):
    pass


class UnsupportedInCharZero(SurfresError):
    """A Frobenius-root (or q-th root, q > 1) was requested over Q."""


class PrecisionTooLow(SurfresError):
    """A decision cannot be made at the current series precision."""


class PrecisionExhausted(SurfresError):
    """An iterative process ran past the series precision."""


class NotPermissible(SurfresError):
    """The blowup center fails the order-permissibility check."""


class NonDivisible(SurfresError):
    """Internal consistency failure: exceptional power does not divide."""


class NoRationalTilt(SurfresError):
    """No tilt constant in the working field makes the element z-regular."""


class IrrationalRootsNeeded(SurfresError):
    """Over Q a candidate root is irrational and could affect the result."""


class CenterNotPolynomialAtPrecision(SurfresError):
    """Neighborhood cleaning could not produce a polynomial curve center."""


class SearchInconclusive(SurfresError):
    """No point-search strategy is available over this field."""


class LimitExceeded(SurfresError):
    """A resolution run hit its blowup limit; carries the partial trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class Undecided(SurfresError):
    """The directrix criteria were inconclusive and no fallback applies."""
