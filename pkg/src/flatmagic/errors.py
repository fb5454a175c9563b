"""Exception types raised by the numerical routines."""


class FlatMagicError(Exception):
    """Base class for all library errors."""


class SingularShift(FlatMagicError):
    """The Bloch shift k sits on the dual lattice, where (2D_zbar + k) is not invertible."""


class NearSingular(FlatMagicError):
    """A matrix is too ill conditioned for a reliable linear solve."""


class EigenSolverError(FlatMagicError):
    """The dense eigenvalue kernel failed to converge or got non-finite input."""


class ContourThroughZero(FlatMagicError):
    """The multiplicity contour passes (numerically) through a zero of the family."""


class NonInteger(FlatMagicError):
    """The contour integral is not close enough to an integer."""

    def __init__(self, raw, message=None):
        self.raw = raw
        super().__init__(message or f"contour integral {raw!r} is not near an integer")


class LatticeMismatch(FlatMagicError):
    """Two trigonometric polynomials live on incompatible lattices."""
