"""
Camera intrinsics and the projection/distortion forward model.

Supports the pinhole camera and polynomial radial distortion with one or two
coefficients, d(r) = 1 + k1 r^2 + k2 r^4 applied to normalized coordinates.
All point operations are vectorized over arrays of shape (..., 2).
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Tuple

import numpy as np

from ..core.exceptions import DomainError, InvalidCameraError, NonInvertibleError

UNDISTORT_MAX_ITERS = 50
UNDISTORT_TOL = 1e-12


class CameraModel(str, Enum):
    """Camera model options."""
    PINHOLE = "pinhole"
    RADIAL1 = "radial1"
    RADIAL2 = "radial2"

    @property
    def num_distortion(self) -> int:
        """Number of distortion coefficients the model optimizes."""
        return {"pinhole": 0, "radial1": 1, "radial2": 2}[self.value]


@dataclass(frozen=True)
class CameraParams:
    """
    Camera intrinsics with square pixels and no skew.

    Attributes:
        model: Camera model tag
        f: Focal length in pixels
        cx, cy: Principal point in pixels
        k1, k2: Radial distortion coefficients, zero where the model has none
        width, height: Image size in pixels
    """
    model: CameraModel
    f: float
    cx: float
    cy: float
    width: int
    height: int
    k1: float = 0.0
    k2: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "model", CameraModel(self.model))
        if not (self.f > 0 and math.isfinite(self.f)):
            raise InvalidCameraError(f"Focal length must be positive, got {self.f}")
        if int(self.width) < 1 or int(self.height) < 1:
            raise InvalidCameraError(
                f"Image size must be positive, got {self.width}x{self.height}"
            )
        if self.model is CameraModel.PINHOLE and (self.k1 != 0.0 or self.k2 != 0.0):
            raise InvalidCameraError("Pinhole camera must have k1 = k2 = 0")
        if self.model is CameraModel.RADIAL1 and self.k2 != 0.0:
            raise InvalidCameraError("Radial1 camera must have k2 = 0")

    @classmethod
    def from_size(
        cls,
        width: int,
        height: int,
        f: float,
        model: CameraModel = CameraModel.PINHOLE,
        k1: float = 0.0,
        k2: float = 0.0,
    ) -> "CameraParams":
        """Camera with the principal point at the image center."""
        return cls(
            model=model, f=float(f), cx=width / 2.0, cy=height / 2.0,
            width=int(width), height=int(height), k1=float(k1), k2=float(k2),
        )

    @property
    def c(self) -> np.ndarray:
        return np.array([self.cx, self.cy])

    @property
    def k(self) -> np.ndarray:
        """Free distortion coefficients of the model (length 0, 1 or 2)."""
        return np.array([self.k1, self.k2][: self.model.num_distortion])

    @property
    def size(self) -> Tuple[int, int]:
        return (self.width, self.height)

    @property
    def vfov(self) -> float:
        return vfov(self)

    def with_focal(self, f: float) -> "CameraParams":
        return replace(self, f=float(f))

    def with_distortion(self, k) -> "CameraParams":
        """Replace the free distortion coefficients; missing entries are zero."""
        k = list(np.asarray(k, dtype=float).ravel()) + [0.0, 0.0]
        return replace(self, k1=float(k[0]), k2=float(k[1]))


def normalize(params: CameraParams, p) -> np.ndarray:
    """Pixel coordinates to normalized image coordinates, (p - c) / f."""
    p = np.asarray(p, dtype=float)
    return (p - params.c) / params.f


def denormalize(params: CameraParams, q) -> np.ndarray:
    """Normalized image coordinates to pixels, f q + c."""
    q = np.asarray(q, dtype=float)
    return q * params.f + params.c


def radial_factor(params: CameraParams, r2) -> np.ndarray:
    """d(r) = 1 + k1 r^2 + k2 r^4 as a function of r^2."""
    r2 = np.asarray(r2, dtype=float)
    return 1.0 + params.k1 * r2 + params.k2 * r2 * r2


def distort(params: CameraParams, q) -> np.ndarray:
    """Apply the radial distortion d(u, v, k) (u, v)."""
    q = np.asarray(q, dtype=float)
    if params.model is CameraModel.PINHOLE:
        return q.copy()
    r2 = np.sum(q * q, axis=-1)
    return q * radial_factor(params, r2)[..., None]


def _profile_derivative(params: CameraParams, s: np.ndarray) -> np.ndarray:
    # d/ds of s d(s) = s + k1 s^3 + k2 s^5
    s2 = s * s
    return 1.0 + 3.0 * params.k1 * s2 + 5.0 * params.k2 * s2 * s2


def undistort(params: CameraParams, qd, strict: bool = True):
    """
    Invert the radial distortion by Newton iteration on the radius.

    Solves s + k1 s^3 + k2 s^5 = r_d for each point. Points are iterated
    independently (converged points are frozen) so the result of a point
    never depends on the other points in the batch.

    Args:
        params: Camera intrinsics
        qd: Distorted normalized points, shape (..., 2)
        strict: Raise NonInvertibleError on failure instead of masking

    Returns:
        Undistorted points if strict, else (points, valid mask). Invalid
        points are returned unchanged.
    """
    qd = np.asarray(qd, dtype=float)
    if params.model is CameraModel.PINHOLE or (params.k1 == 0.0 and params.k2 == 0.0):
        q = qd.copy()
        return q if strict else (q, np.ones(qd.shape[:-1], dtype=bool))

    rd = np.sqrt(np.sum(qd * qd, axis=-1))
    s = rd.copy()
    valid = np.ones(rd.shape, dtype=bool)
    active = rd > 0.0

    for _ in range(UNDISTORT_MAX_ITERS):
        if not active.any():
            break
        sa = s[active]
        deriv = _profile_derivative(params, sa)
        folded = deriv <= 0.0
        if folded.any():
            idx = np.flatnonzero(active)[folded]
            valid.flat[idx] = False
            active.flat[idx] = False
            sa = sa[~folded]
            deriv = deriv[~folded]
        sa2 = sa * sa
        g = sa * (1.0 + params.k1 * sa2 + params.k2 * sa2 * sa2) - rd[active]
        step = g / deriv
        s[active] = sa - step
        done = np.abs(step) <= UNDISTORT_TOL * np.maximum(1.0, np.abs(sa))
        idx = np.flatnonzero(active)[done]
        active.flat[idx] = False
    else:
        if active.any():
            valid[active] = False

    # the converged radius must sit on the increasing branch of the profile
    valid &= _profile_derivative(params, s) > 0.0
    valid &= s >= 0.0

    scale = np.ones_like(rd)
    nz = rd > 0.0
    scale[nz] = s[nz] / rd[nz]
    q = np.where(valid[..., None], qd * scale[..., None], qd)

    if strict:
        if not valid.all():
            bad = float(np.max(np.where(valid, 0.0, rd)))
            raise NonInvertibleError(
                f"Cannot undistort point at distorted radius {bad:.6g} "
                f"(k1={params.k1:.6g}, k2={params.k2:.6g})",
                radius=bad,
            )
        return q
    return q, valid


def invertible_radius(params: CameraParams) -> float:
    """
    Largest distorted radius up to which the radial profile is monotone.

    Returns +inf when s d(s) never folds.
    """
    k1, k2 = params.k1, params.k2
    # 1 + 3 k1 x + 5 k2 x^2 = 0 with x = s^2
    if k2 == 0.0:
        roots = [-1.0 / (3.0 * k1)] if k1 < 0.0 else []
    else:
        disc = 9.0 * k1 * k1 - 20.0 * k2
        if disc < 0.0:
            roots = []
        else:
            sq = math.sqrt(disc)
            roots = [(-3.0 * k1 - sq) / (10.0 * k2), (-3.0 * k1 + sq) / (10.0 * k2)]
    roots = [x for x in roots if x > 0.0]
    if not roots:
        return math.inf
    s = math.sqrt(min(roots))
    return s * (1.0 + k1 * s * s + k2 * s ** 4)


def frame_radius(params: CameraParams) -> float:
    """Largest distorted normalized radius over the image corners."""
    xs = np.array([0.0, params.width])
    ys = np.array([0.0, params.height])
    corners = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    return float(np.max(np.linalg.norm(normalize(params, corners), axis=-1)))


def vfov(params: CameraParams) -> float:
    """Vertical field of view in radians, 2 atan(H / 2f)."""
    return 2.0 * math.atan(params.height / (2.0 * params.f))


def focal_from_vfov(vfov: float, height: float) -> float:
    """Focal length in pixels for a vertical field of view and image height."""
    if not (0.0 < vfov < math.pi):
        raise DomainError(f"Vertical field of view must lie in (0, pi), got {vfov}")
    if height <= 0:
        raise DomainError(f"Image height must be positive, got {height}")
    return height / (2.0 * math.tan(vfov / 2.0))


def vfov_from_focal(f: float, height: float) -> float:
    """Vertical field of view in radians for a focal length and image height."""
    return 2.0 * math.atan(height / (2.0 * f))
