"""Exception types shared across the toolkit.

Every error raised on purpose by this package derives from LatdecError so
callers (and the CLI exit-code mapping) can tell deliberate failures apart
from plain bugs.
"""


class LatdecError(Exception):
    """Base class for all deliberate toolkit errors."""


class NotSymmetric(LatdecError):
    """Matrix expected to be symmetric is not (beyond tolerance)."""


class NotPositiveDefinite(LatdecError):
    """Cholesky pivot fell below the positive-definiteness floor."""


class RankDeficient(LatdecError):
    """Matrix does not have the full rank the operation requires."""


class SingularTriangular(LatdecError):
    """Triangular solve hit a diagonal entry too close to zero."""


class SingularInput(LatdecError):
    """Input matrix is singular where an invertible one is required."""


class BudgetExceeded(LatdecError):
    """An enumeration candidate budget was exceeded."""


class EnumerationOverflow(LatdecError):
    """Sphere-search node budget exceeded."""


class IterationOverflow(LatdecError):
    """Basis reduction exceeded its iteration (swap) budget."""


class NearSingularChannel(LatdecError):
    """Effective channel matrix is numerically singular for an
    unregularized decode."""


class InsufficientData(LatdecError):
    """Not enough qualifying measurements to fit a slope."""


class SchemaError(LatdecError):
    """Experiment file failed validation."""
