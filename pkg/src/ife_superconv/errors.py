"""Exception hierarchy.

Every error also derives from the closest builtin so callers can catch
either the specific class or e.g. ``ValueError``.
"""


class IFEError(Exception):
    """Base class for all solver errors."""


class InvalidCoefficientError(IFEError, ValueError):
    """A diffusion coefficient piece is not strictly positive."""


class InvalidInterfaceError(IFEError, ValueError):
    """Interface abscissae are unordered or outside the domain."""


class UnsupportedOrderError(IFEError, ValueError):
    """Quadrature order or polynomial degree outside the supported range."""


class InvalidBreakpointError(IFEError, ValueError):
    """A breakpoint lies outside the integration interval."""


class RecurrenceBreakdownError(IFEError, ArithmeticError):
    """The three-term recurrence produced a nonpositive norm."""


class DomainError(IFEError, ValueError):
    """An argument lies outside the domain of the operation."""


class RootCountViolationError(IFEError, RuntimeError):
    """A generalized polynomial has an unexpected number of interior roots."""


class InvalidMeshError(IFEError, ValueError):
    """Mesh points are not strictly increasing or too few elements."""


class SingularSystemError(IFEError, ArithmeticError):
    """The assembled system could not be factorized."""


class InsufficientDataError(IFEError, ValueError):
    """Not enough positive samples to fit a convergence rate."""


class ConfigError(IFEError, ValueError):
    """Malformed run configuration."""
