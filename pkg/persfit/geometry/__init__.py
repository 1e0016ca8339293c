"""Camera model, gravity manifold and perspective-field forward model."""

from .camera_model import (
    CameraModel,
    CameraParams,
    denormalize,
    distort,
    focal_from_vfov,
    invertible_radius,
    normalize,
    undistort,
    vfov,
)
from .gravity_manifold import (
    GravityDir,
    angle_between,
    from_roll_pitch,
    retract,
    roll_pitch,
    tangent_basis,
)
from .perspective_field import (
    PerspectiveField,
    latitude_at,
    render_field,
    sample_field,
    up_vector_at,
)

__all__ = [
    "CameraModel",
    "CameraParams",
    "GravityDir",
    "PerspectiveField",
    "angle_between",
    "denormalize",
    "distort",
    "focal_from_vfov",
    "from_roll_pitch",
    "invertible_radius",
    "latitude_at",
    "normalize",
    "render_field",
    "retract",
    "roll_pitch",
    "sample_field",
    "tangent_basis",
    "undistort",
    "up_vector_at",
    "vfov",
]
