"""Exception hierarchy shared by every maxbv module."""


class MaxBVError(Exception):
    """Base class for all maxbv errors."""


class NonMonotoneBreakpoints(MaxBVError, ValueError):
    pass


class CountMismatch(MaxBVError, ValueError):
    pass


class BreakpointOutsideDomain(MaxBVError, ValueError):
    pass


class WindowOutsideDomain(MaxBVError, ValueError):
    pass


class OutsideDomain(MaxBVError, ValueError):
    pass


class InvalidExponent(MaxBVError, ValueError):
    pass


class ZeroFunction(MaxBVError, ValueError):
    pass


class NonPositiveR(MaxBVError, ValueError):
    pass


class NonPositiveT(MaxBVError, ValueError):
    pass


class MarginTooSmall(MaxBVError, ValueError):
    pass


class BadShape(MaxBVError, ValueError):
    pass


class NonFiniteValue(MaxBVError, ValueError):
    pass


class ResolutionTooCoarse(MaxBVError, ValueError):
    pass


class UnknownSuite(MaxBVError, KeyError):
    pass


class NoConvergence(MaxBVError, RuntimeError):
    pass


class BudgetExceeded(MaxBVError, RuntimeError):
    """Adaptive work hit its cap before stabilizing.

    ``partial`` carries whatever was computed so far (a profile, a grid, ...)
    so callers can still report the achieved tolerance.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
