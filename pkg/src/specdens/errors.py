"""Exception types shared across the package.

Every error raised on bad input or a violated precondition derives from
:class:`SpecdensError`, so callers can catch the package's failures with a
single except clause while still distinguishing individual conditions.
"""

from __future__ import annotations


class SpecdensError(Exception):
    """Base class for all errors raised by this package."""


# --- pattern / profile structure ---------------------------------------------


class NotSymmetricError(SpecdensError):
    """A matrix required to be symmetric is not."""


class NegativeEntryError(SpecdensError):
    """A matrix required to be entrywise non-negative has a negative entry."""


class ZeroRowError(SpecdensError):
    """An operation requires every row to contain a non-zero entry."""


class NoSupportError(SpecdensError):
    """The zero pattern admits no positive diagonal (no perfect matching)."""


class HasSupportError(SpecdensError):
    """The operation only applies to patterns without a positive diagonal."""


class TooLargeError(SpecdensError):
    """The brute-force oracle was called beyond its exhaustive-search limit."""


class StructureViolationError(SpecdensError):
    """A structural invariant of the block normal form failed to hold."""


class CyclicRelationError(SpecdensError):
    """The block relation derived from the mask contains a directed cycle."""


# --- min-max boundary problems ------------------------------------------------


class NotDAGError(SpecdensError):
    """The vertex relation of a boundary problem contains a directed cycle."""


class BadBoundaryError(SpecdensError):
    """A vertex with empty past or empty future is missing from the boundary."""


class InfeasibleError(SpecdensError):
    """No monotone solution exists for the boundary data."""


class PreconditionViolatedError(SpecdensError):
    """A perturbation bound's smallness precondition does not hold."""


# --- iterative solvers ---------------------------------------------------------


class NonConvergenceError(SpecdensError):
    """An iterative solver exhausted its budget before reaching tolerance.

    Attributes
    ----------
    residual : float or None
        Best residual reached when the budget ran out, if known.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ImaginarySignLostError(SpecdensError):
    """A Stieltjes-transform iterate left the complex upper half-plane."""


class NonPositiveInputError(SpecdensError):
    """An argument required to be strictly positive is not."""


# --- Monte Carlo ---------------------------------------------------------------


class EigFailureError(SpecdensError):
    """An eigendecomposition failed or did not pass its sanity checks."""


class SingularMatrixError(SpecdensError):
    """A condition number was requested for an exactly singular matrix."""


class GridTooCoarseError(SpecdensError):
    """A quantile fell below the resolution of the supplied density grid."""
