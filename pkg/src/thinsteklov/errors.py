"""Exception types raised by the solvers.

Every error derives from :class:`ThinSteklovError`. The two intermediate
classes :class:`ConfigError` and :class:`NumericError` decide the exit code
used by the command-line front end (2 and 3 respectively).
"""


class ThinSteklovError(Exception):
    """Base class of all package errors."""


class ConfigError(ThinSteklovError, ValueError):
    """Invalid or malformed run configuration."""


class NumericError(ThinSteklovError):
    """Geometry or linear-algebra failure."""


class DegenerateCurve(NumericError):
    pass


class NotClosed(NumericError):
    pass


class InadmissibleThickness(NumericError, ValueError):
    """Thickness outside the admissible range of the curve."""


class ProfileNotPositive(NumericError, ValueError):
    pass


class SingularOperator(NumericError, ValueError):
    pass


class JacobianDegenerate(NumericError):
    pass


class NotPositiveDefinite(NumericError):
    """Cholesky breakdown.

    ``pivot`` is the zero-based index of the first non-positive pivot.
    """

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not positive definite (pivot {pivot})")


class ConvergenceFailure(NumericError):
    pass


class InsufficientModes(NumericError, ValueError):
    pass


class MultiplicityMismatch(NumericError, ValueError):
    pass
