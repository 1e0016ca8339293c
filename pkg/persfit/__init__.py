"""
persfit - Camera calibration from perspective fields

Recovers the gravity direction, focal length and radial distortion of a
single image from a dense field of up-vectors and latitudes.

Features:
- Pinhole, one- and two-coefficient radial camera models
- Gravity on the unit sphere with a 2-D tangent parameterization
- Analytic Jacobians with a finite-difference check
- Levenberg-Marquardt refinement with uncertainty propagation
- Fixed parameters and Gaussian priors for partial calibration
- Synthetic scenarios, benchmark metrics and a binary field format
"""

__version__ = "0.1.0"

from .geometry import CameraModel, CameraParams, GravityDir, PerspectiveField
from .optim import CalibrationProblem, CalibrationResult, calibrate

__all__ = [
    "__version__",
    "CalibrationProblem",
    "CalibrationResult",
    "CameraModel",
    "CameraParams",
    "GravityDir",
    "PerspectiveField",
    "calibrate",
]
