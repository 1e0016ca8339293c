"""
Evaluation metrics.

Angular errors are in degrees; a failed estimate is encoded as +inf so it
counts as never recalled. AUC integrates the recall curve up to a threshold
with every error clamped to at least 1 degree.
"""

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from ..core.exceptions import DimensionMismatchError, DomainError, EmptyInputError
from ..geometry.camera_model import CameraModel, CameraParams, distort, normalize
from ..geometry.gravity_manifold import GravityDir, angle_between, roll_pitch
from ..geometry.perspective_field import pixel_centers

AUC_CLAMP_DEG = 1.0
AUC_THRESHOLDS = (1.0, 5.0, 10.0)
PIXEL_RECALL_THRESHOLDS = (0.5, 1.0, 3.0, 5.0)
PIXEL_GRID_STRIDE = 4


@dataclass
class ErrorSample:
    """Errors of one estimate (degrees, pixels)."""
    roll_err: float
    pitch_err: float
    gravity_err: float
    vfov_err: float
    pixel_dist_err: float = 0.0

    @classmethod
    def failure(cls) -> "ErrorSample":
        return cls(math.inf, math.inf, math.inf, math.inf, math.inf)


def _wrap_deg(x: float) -> float:
    x = abs(x) % 360.0
    return min(x, 360.0 - x)


def angular_errors(
    gt_params: CameraParams,
    gt_gravity: GravityDir,
    est_params: CameraParams,
    est_gravity: GravityDir,
) -> ErrorSample:
    """
    Roll, pitch, gravity-angle and vfov errors in degrees.

    Raises:
        DimensionMismatchError: The cameras have different image sizes
    """
    if gt_params.size != est_params.size:
        raise DimensionMismatchError(
            f"Cannot compare a {gt_params.size} camera with a {est_params.size} camera"
        )
    roll_gt, pitch_gt = roll_pitch(gt_gravity)
    roll_est, pitch_est = roll_pitch(est_gravity)
    return ErrorSample(
        roll_err=_wrap_deg(math.degrees(roll_est - roll_gt)),
        pitch_err=abs(math.degrees(pitch_est - pitch_gt)),
        gravity_err=math.degrees(angle_between(gt_gravity.vec, est_gravity.vec)),
        vfov_err=abs(math.degrees(gt_params.vfov - est_params.vfov)),
    )


def auc(errors: Sequence[float], threshold: float) -> float:
    """
    Area under the recall curve up to ``threshold``, as a percentage.

    Each error e contributes max(0, t - max(e, 1)) / t, the exact integral
    of its recall step over [0, t].

    Raises:
        EmptyInputError: No errors
        DomainError: Non-positive threshold
    """
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise EmptyInputError("AUC of an empty error list")
    if not threshold > 0:
        raise DomainError(f"AUC threshold must be positive, got {threshold}")
    clamped = np.maximum(errors, AUC_CLAMP_DEG)
    area = np.clip(threshold - clamped, 0.0, None) / threshold
    return float(np.mean(area) * 100.0)


def recall(errors: Sequence[float], thresholds: Sequence[float] = PIXEL_RECALL_THRESHOLDS) -> List[float]:
    """Percentage of errors at or below each threshold."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise EmptyInputError("Recall of an empty error list")
    return [float(np.mean(errors <= t) * 100.0) for t in thresholds]


def median(errors: Sequence[float]) -> float:
    """Median; an even count averages the two middle values."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise EmptyInputError("Median of an empty error list")
    return float(np.median(errors))


def pixel_distortion_error(
    gt: CameraParams,
    est_k: Sequence[float],
    stride: int = PIXEL_GRID_STRIDE,
) -> float:
    """
    Mean pixel displacement between the ground-truth and estimated distortion.

    Both distortions are applied with the ground-truth focal length to the
    normalized pixel-center grid of stride ``stride``.
    """
    gt_radial = CameraParams(
        model=CameraModel.RADIAL2, f=gt.f, cx=gt.cx, cy=gt.cy,
        width=gt.width, height=gt.height, k1=gt.k1, k2=gt.k2,
    )
    est_radial = gt_radial.with_distortion(est_k)
    points, _ = pixel_centers(gt.width, gt.height, stride)
    q = normalize(gt_radial, points)
    diff = distort(gt_radial, q) - distort(est_radial, q)
    return float(np.mean(gt.f * np.linalg.norm(diff, axis=-1)))


# ==================== Uncertainty evaluation ====================

def calibration_curve(
    errors: Sequence[float],
    sigmas: Sequence[float],
    n_bins: int = 5,
) -> List[Tuple[float, float, int]]:
    """
    Mean error per quantile bin of predicted uncertainty.

    Returns:
        (mean sigma, mean error, count) per non-empty bin, by increasing sigma
    """
    errors = np.asarray(errors, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    if errors.size == 0:
        raise EmptyInputError("Calibration curve of an empty sample")
    if errors.shape != sigmas.shape:
        raise DimensionMismatchError("errors and sigmas must have the same length")
    edges = np.quantile(sigmas, np.linspace(0.0, 1.0, n_bins + 1))
    bins = np.clip(np.searchsorted(edges, sigmas, side="right") - 1, 0, n_bins - 1)
    curve = []
    for b in range(n_bins):
        sel = bins == b
        if sel.any():
            curve.append((float(sigmas[sel].mean()), float(errors[sel].mean()), int(sel.sum())))
    return curve


def uncertainty_precision_recall(
    errors: Sequence[float],
    sigmas: Sequence[float],
    thresholds: Sequence[float] = AUC_THRESHOLDS,
) -> List[Tuple[float, float]]:
    """
    Precision and recall (percent) of predicting "error <= t" by "sigma <= t".

    An empty denominator yields 0.
    """
    errors = np.asarray(errors, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    out = []
    for t in thresholds:
        predicted = sigmas <= t
        actual = errors <= t
        tp = np.count_nonzero(predicted & actual)
        precision = 100.0 * tp / predicted.sum() if predicted.any() else 0.0
        rec = 100.0 * tp / actual.sum() if actual.any() else 0.0
        out.append((float(precision), float(rec)))
    return out


# ==================== Benchmark report ====================

@dataclass
class BenchmarkRow:
    """Summary of one method/config over a set of scenarios."""
    name: str
    median_roll: float
    median_pitch: float
    median_vfov: float
    auc_roll: List[float] = field(default_factory=list)
    auc_pitch: List[float] = field(default_factory=list)
    auc_vfov: List[float] = field(default_factory=list)

    @classmethod
    def from_samples(
        cls,
        name: str,
        samples: Sequence[ErrorSample],
        thresholds: Sequence[float] = AUC_THRESHOLDS,
    ) -> "BenchmarkRow":
        roll = [s.roll_err for s in samples]
        pitch = [s.pitch_err for s in samples]
        vfov = [s.vfov_err for s in samples]
        return cls(
            name=name,
            median_roll=median(roll),
            median_pitch=median(pitch),
            median_vfov=median(vfov),
            auc_roll=[auc(roll, t) for t in thresholds],
            auc_pitch=[auc(pitch, t) for t in thresholds],
            auc_vfov=[auc(vfov, t) for t in thresholds],
        )


def report_header(thresholds: Sequence[float] = AUC_THRESHOLDS) -> List[str]:
    cols = ["method", "median_roll", "median_pitch", "median_vfov"]
    for quantity in ("roll", "pitch", "vfov"):
        cols += [f"auc_{quantity}@{t:g}" for t in thresholds]
    return cols


def format_report(rows: Sequence[BenchmarkRow], thresholds: Sequence[float] = AUC_THRESHOLDS) -> str:
    """Tab-separated table with a header line and two decimals."""
    lines = ["\t".join(report_header(thresholds))]
    for row in rows:
        values = [row.median_roll, row.median_pitch, row.median_vfov,
                  *row.auc_roll, *row.auc_pitch, *row.auc_vfov]
        lines.append("\t".join([row.name] + [f"{v:.2f}" for v in values]))
    return "\n".join(lines) + "\n"
