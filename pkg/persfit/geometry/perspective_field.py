"""
Perspective fields: per-pixel up-vectors and latitudes.

The up-vector at a pixel is the image-plane direction in which a 3D point
moves when it is displaced against gravity; the latitude is the elevation
of the pixel's back-projected ray above the plane orthogonal to gravity.
Latitude is positive toward gravity (below the horizon).

Pixels are sampled at their centers, (px + 0.5, py + 0.5).
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from ..core.exceptions import (
    DegeneratePixelError,
    DimensionMismatchError,
    InvariantViolationError,
    NonInvertibleError,
)
from .camera_model import CameraModel, CameraParams, normalize, undistort
from .gravity_manifold import GravityDir

DEGENERATE_EPS = 1e-9
DEGENERATE_UP = np.array([0.0, -1.0])


@dataclass(eq=False)
class PerspectiveField:
    """
    Up-vector, latitude and confidence grids on an H x W image.

    Attributes:
        up: (H, W, 2) unit up-vectors
        latitude: (H, W) latitudes in radians
        conf_up: (H, W) up-vector confidences in [0, 1]
        conf_lat: (H, W) latitude confidences in [0, 1]
    """
    up: np.ndarray
    latitude: np.ndarray
    conf_up: Optional[np.ndarray] = None
    conf_lat: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.up = np.asarray(self.up, dtype=float)
        self.latitude = np.asarray(self.latitude, dtype=float)
        if self.latitude.ndim != 2 or self.up.shape != self.latitude.shape + (2,):
            raise DimensionMismatchError(
                f"Up grid {self.up.shape} does not match latitude grid "
                f"{self.latitude.shape}"
            )
        shape = self.latitude.shape
        if shape[0] < 1 or shape[1] < 1:
            raise DimensionMismatchError(f"Empty field grid {shape}")
        self.conf_up = (
            np.ones(shape) if self.conf_up is None
            else np.asarray(self.conf_up, dtype=float)
        )
        self.conf_lat = (
            np.ones(shape) if self.conf_lat is None
            else np.asarray(self.conf_lat, dtype=float)
        )
        for name, grid in (("conf_up", self.conf_up), ("conf_lat", self.conf_lat)):
            if grid.shape != shape:
                raise DimensionMismatchError(
                    f"{name} grid {grid.shape} does not match field {shape}"
                )

    @property
    def width(self) -> int:
        return int(self.latitude.shape[1])

    @property
    def height(self) -> int:
        return int(self.latitude.shape[0])

    @property
    def size(self) -> Tuple[int, int]:
        return (self.width, self.height)

    def copy(self) -> "PerspectiveField":
        return PerspectiveField(
            self.up.copy(), self.latitude.copy(),
            self.conf_up.copy(), self.conf_lat.copy(),
        )

    def check_invariants(self, norm_tol: float = 1e-6, lat_tol: float = 0.0) -> None:
        """
        Validate unit up-vectors, latitude range and confidence range.

        Raises:
            InvariantViolationError: With the first offending pixel
        """
        checks = (
            ("up-vector norm", np.abs(np.linalg.norm(self.up, axis=-1) - 1.0) > norm_tol),
            ("latitude", ~(np.abs(self.latitude) <= np.pi / 2 + lat_tol)),
            ("up confidence", ~((self.conf_up >= 0.0) & (self.conf_up <= 1.0))),
            ("latitude confidence", ~((self.conf_lat >= 0.0) & (self.conf_lat <= 1.0))),
        )
        for what, bad in checks:
            if bad.any():
                row, col = np.argwhere(bad)[0]
                raise InvariantViolationError(what, int(row), int(col))

    def check_camera(self, params: CameraParams) -> None:
        if self.size != params.size:
            raise DimensionMismatchError(
                f"Field is {self.width}x{self.height} but camera is "
                f"{params.width}x{params.height}"
            )


@dataclass
class FieldSample:
    """
    Model up-vectors and latitudes evaluated at a set of pixels.

    ``ray_valid`` marks pixels whose ray could be undistorted; ``valid``
    additionally excludes the vanishing point of gravity.
    """
    up: np.ndarray
    sin_lat: np.ndarray
    valid: np.ndarray
    degenerate: np.ndarray
    ray_valid: np.ndarray

    @property
    def latitude(self) -> np.ndarray:
        return np.arcsin(np.clip(self.sin_lat, -1.0, 1.0))


def pixel_centers(width: int, height: int, stride: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pixel centers of a regular stride subgrid, row-major.

    Returns:
        (points, index) with points (N, 2) in pixels and index (N, 2) of
        (row, col) integer grid indices
    """
    rows = np.arange(0, height, stride)
    cols = np.arange(0, width, stride)
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    index = np.stack([rr.ravel(), cc.ravel()], axis=-1)
    points = np.stack([cc.ravel() + 0.5, rr.ravel() + 0.5], axis=-1).astype(float)
    return points, index


def projected_gravity(q: np.ndarray, g: np.ndarray) -> np.ndarray:
    """(u gz - gx, v gz - gy), the pinhole up direction at q."""
    return q * g[2] - g[:2]


def evaluate_field(params: CameraParams, g: GravityDir, points) -> FieldSample:
    """
    Vectorized forward model at pixel coordinates.

    Invalid pixels (beyond the invertible radius, or at the vanishing point
    of gravity) are flagged; their up-vector is (0, -1).
    """
    points = np.asarray(points, dtype=float)
    gv = g.vec
    q, valid = undistort(params, normalize(params, points), strict=False)
    ubar = projected_gravity(q, gv)

    if params.model is CameraModel.PINHOLE:
        w = ubar
    else:
        s = np.sum(q * q, axis=-1)
        d = 1.0 + params.k1 * s + params.k2 * s * s
        c = 2.0 * (params.k1 + 2.0 * params.k2 * s)
        qu = np.sum(q * ubar, axis=-1)
        w = d[..., None] * ubar + (c * qu)[..., None] * q

    norm = np.sqrt(np.sum(w * w, axis=-1))
    degenerate = norm < DEGENERATE_EPS
    safe = np.where(degenerate, 1.0, norm)
    up = np.where((degenerate | ~valid)[..., None], DEGENERATE_UP, w / safe[..., None])

    n_norm = np.sqrt(np.sum(q * q, axis=-1) + 1.0)
    sin_lat = (q[..., 0] * gv[0] + q[..., 1] * gv[1] + gv[2]) / n_norm
    sin_lat = np.where(valid, sin_lat, 0.0)

    return FieldSample(
        up=up, sin_lat=sin_lat, valid=valid & ~degenerate,
        degenerate=degenerate & valid, ray_valid=valid,
    )


def up_vector_at(params: CameraParams, g: GravityDir, p) -> np.ndarray:
    """
    Unit up-vector at a pixel.

    Raises:
        DegeneratePixelError: The pixel is the vanishing point of gravity
        NonInvertibleError: The pixel lies beyond the invertible radius
    """
    p = np.asarray(p, dtype=float).reshape(2)
    sample = evaluate_field(params, g, p[None])
    if sample.degenerate[0]:
        raise DegeneratePixelError((float(p[0]), float(p[1])))
    if not sample.valid[0]:
        raise NonInvertibleError(f"Pixel ({p[0]:.3f}, {p[1]:.3f}) is beyond the invertible radius")
    return sample.up[0]


def latitude_at(params: CameraParams, g: GravityDir, p) -> float:
    """
    Latitude in radians of the ray through a pixel.

    Raises:
        NonInvertibleError: The pixel lies beyond the invertible radius
    """
    p = np.asarray(p, dtype=float).reshape(2)
    sample = evaluate_field(params, g, p[None])
    if not sample.ray_valid[0]:
        raise NonInvertibleError(f"Pixel ({p[0]:.3f}, {p[1]:.3f}) is beyond the invertible radius")
    return float(sample.latitude[0])


def render_field(params: CameraParams, g: GravityDir) -> PerspectiveField:
    """
    Render the full-resolution perspective field of a camera.

    Confidences are 1. The vanishing point of gravity gets conf_up = 0;
    pixels beyond the invertible radius get both confidences 0.
    """
    points, _ = pixel_centers(params.width, params.height)
    sample = evaluate_field(params, g, points)
    shape = (params.height, params.width)
    return PerspectiveField(
        up=sample.up.reshape(shape + (2,)),
        latitude=sample.latitude.reshape(shape),
        conf_up=sample.valid.astype(float).reshape(shape),
        conf_lat=sample.ray_valid.astype(float).reshape(shape),
    )


def sample_field(field: PerspectiveField, x, y) -> Tuple[np.ndarray, np.ndarray]:
    """
    Bilinear sample of a field at continuous pixel coordinates.

    Pixel (x, y) = (col + 0.5, row + 0.5) hits grid node (row, col) exactly.
    Samples outside the grid clamp to the border.

    Returns:
        (up, latitude) with up renormalized to unit length
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    coords = np.stack([y - 0.5, x - 0.5])

    def _interp(grid: np.ndarray) -> np.ndarray:
        return ndimage.map_coordinates(grid, coords, order=1, mode="nearest")

    up = np.stack([_interp(field.up[..., 0]), _interp(field.up[..., 1])], axis=-1)
    up /= np.maximum(np.linalg.norm(up, axis=-1, keepdims=True), DEGENERATE_EPS)
    return up, _interp(field.latitude)
