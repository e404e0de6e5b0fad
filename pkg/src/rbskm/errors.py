"""Exception types shared across the package."""


class RbskmError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(RbskmError, ValueError):
    """Operands have incompatible shapes."""


class DegenerateMatrixError(RbskmError, ValueError):
    """An operation received an all-zero or otherwise degenerate matrix."""


class MatrixMarketError(RbskmError, ValueError):
    """Malformed Matrix Market input; carries the 1-based line number."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class XiUndefinedError(RbskmError, ArithmeticError):
    """The selection-ratio denominator vanished on every sampled subset."""


class CapabilityError(RbskmError, ValueError):
    """A dense-oracle computation was requested above the supported size."""


class StalledIteration(RbskmError, RuntimeError):
    """Every resampled row subset had an identically zero subresidual."""
