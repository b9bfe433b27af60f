"""Exception types raised by splinext."""


class SplinextError(Exception):
    """Base class for all library errors."""


class SingularCirculant(SplinextError, ArithmeticError):
    """A circulant (or its symbol) has an eigenvalue too close to zero."""


class NoCompactDual(SplinextError, ArithmeticError):
    pass


class NormCapUnreachable(SplinextError, ArithmeticError):
    pass


class EmptyDomain(SplinextError, ValueError):
    """No lattice point of the grid lies inside the domain."""


class UnknownDomain(SplinextError, ValueError):
    pass


class UnsupportedZspec(SplinextError, TypeError):
    """The requested operation needs a compactly supported dual."""


class RasterParseError(SplinextError, ValueError):
    pass


class GridMismatch(SplinextError, ValueError):
    pass


class MaxIterationsReached(UserWarning):
    """Issued (not raised) when an iterative solve stops at its iteration cap."""


class LowOversampling(RuntimeWarning):
    """Fewer than ``1.2 N`` grid points fall inside the domain."""
