"""
Persfit exceptions.

Every error raised by the library derives from PersfitError and carries an
``exit_code`` the CLI returns when the error reaches the top level.

Pattern:
- Inherit from the closest category base
- Provide a descriptive detail message
- Keep structured context (paths, pixel indices, byte counts) as attributes
"""

from typing import Optional, Tuple


class PersfitError(Exception):
    """Base class for all persfit errors."""

    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# ==================== USAGE / LAYOUT EXCEPTIONS ====================

class ProblemLayoutError(PersfitError):
    """
    Raised when a calibration problem declares an inconsistent layout.

    Examples: a parameter both fixed and prior-regularized, shared intrinsics
    over fields of different sizes.
    """

    exit_code = 1


class InvalidConfigError(PersfitError):
    """Raised when an optimizer, solver or noise configuration is invalid."""

    exit_code = 1


# ==================== DOMAIN EXCEPTIONS ====================

class DomainError(PersfitError):
    """Raised when an argument lies outside the domain of a function."""

    exit_code = 1


class InvalidCameraError(PersfitError):
    """Raised when camera intrinsics violate their invariants."""

    exit_code = 1


class NonInvertibleError(PersfitError):
    """
    Raised when a distorted point cannot be undistorted.

    The Newton iteration did not converge, or the radial profile folded
    (its derivative changed sign) before reaching the point.
    """

    exit_code = 1

    def __init__(self, detail: str, radius: Optional[float] = None):
        super().__init__(detail)
        self.radius = radius


class GimbalLockError(PersfitError):
    """Raised when roll is requested for a gravity pointing along the optical axis."""

    exit_code = 1


class DegeneratePixelError(PersfitError):
    """Raised when a pixel coincides with the projection of the gravity direction."""

    exit_code = 1

    def __init__(self, pixel: Tuple[float, float]):
        super().__init__(
            f"Up-vector undefined at pixel ({pixel[0]:.3f}, {pixel[1]:.3f}): "
            "the pixel is the vanishing point of the gravity direction"
        )
        self.pixel = pixel


class EmptyInputError(PersfitError):
    """Raised when a metric is asked to summarize an empty sample."""

    exit_code = 1


# ==================== I/O AND FORMAT EXCEPTIONS ====================

class DimensionMismatchError(PersfitError):
    """Raised when a field and a camera disagree on the image size."""

    exit_code = 2


class CameraFormatError(PersfitError):
    """Raised when a camera or gravity text file is malformed."""

    exit_code = 2


class FieldFormatError(PersfitError):
    """Base class for malformed perspective-field files."""

    exit_code = 2


class BadMagicError(FieldFormatError):
    """Raised when a field file does not start with the expected magic."""

    def __init__(self, magic: bytes):
        super().__init__(f"Bad magic {magic!r}: not a perspective field file")
        self.magic = magic


class TruncatedFileError(FieldFormatError):
    """Raised when a field file ends before its declared payload."""

    def __init__(self, expected: int, actual: int):
        super().__init__(
            f"Truncated field file: expected {expected} bytes, got {actual}"
        )
        self.expected = expected
        self.actual = actual


class TrailingDataError(FieldFormatError):
    """Raised when a field file has bytes after its declared payload."""

    def __init__(self, expected: int, actual: int):
        super().__init__(
            f"Trailing data in field file: expected {expected} bytes, got {actual}"
        )
        self.expected = expected
        self.actual = actual


class InvariantViolationError(FieldFormatError):
    """Raised when a decoded field violates a per-pixel invariant."""

    def __init__(self, what: str, row: int, col: int):
        super().__init__(f"Invalid {what} at pixel (row={row}, col={col})")
        self.what = what
        self.row = row
        self.col = col


# ==================== OPTIMIZATION EXCEPTIONS ====================

class SingularSystemError(PersfitError):
    """Raised when the damped normal equations are not positive definite."""

    exit_code = 3


class OptimizationFailedError(PersfitError):
    """Raised when the optimizer stalls with damping at its ceiling."""

    exit_code = 3


class EmptyProblemError(PersfitError):
    """Raised when a calibration problem has no images."""

    exit_code = 3


class DegenerateHeuristicError(PersfitError):
    """Raised when the heuristic initializer sees an unusable latitude span."""

    exit_code = 3


class InsufficientSamplesError(PersfitError):
    """Raised when a field has too few confident pixels for the minimal solver."""

    exit_code = 3


class NoHypothesisError(PersfitError):
    """Raised when every minimal sample drawn by RANSAC was degenerate."""

    exit_code = 3
