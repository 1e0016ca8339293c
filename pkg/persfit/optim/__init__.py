"""Residuals, Levenberg-Marquardt, initialization and calibration problems."""

from .calibrator import (
    CalibrationProblem,
    CalibrationResult,
    Prior,
    Sharing,
    calibrate,
)
from .initialization import RansacConfig, init_heuristic, init_solver, init_trivial, ransac_solve
from .jacobians import ParameterMask, check_jacobians, jacobian, residuals
from .lm_optimizer import LMConfig, LMStatus, lm_step, optimize

__all__ = [
    "CalibrationProblem",
    "CalibrationResult",
    "LMConfig",
    "LMStatus",
    "ParameterMask",
    "Prior",
    "RansacConfig",
    "Sharing",
    "calibrate",
    "check_jacobians",
    "init_heuristic",
    "init_solver",
    "init_trivial",
    "jacobian",
    "lm_step",
    "optimize",
    "ransac_solve",
    "residuals",
]
