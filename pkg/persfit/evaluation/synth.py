"""
Synthetic scenarios: random cameras, rendered fields and controlled noise.

Sampling ranges:
- roll, pitch ~ U[-45 deg, 45 deg]
- vertical field of view ~ U[20 deg, 105 deg]
- k_hat ~ N(0, 0.07) truncated to [-0.3, 0.3], with k1 = k_hat * vfov in
  radians; second-order ground truth keeps k2 = 0

Each scenario seed is split into three PCG64 streams (parameters, field
noise, outliers) so changing the noise never changes the camera.
"""

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from ..core.exceptions import DomainError
from ..core.logging import get_logger
from ..geometry.camera_model import (
    CameraModel,
    CameraParams,
    focal_from_vfov,
    frame_radius,
    invertible_radius,
)
from ..geometry.gravity_manifold import GravityDir, from_roll_pitch
from ..geometry.perspective_field import PerspectiveField, render_field
from ..io.fieldio import load_field, save_field
from ..io.textio import load_camera, load_gravity, save_camera, save_gravity
from ..utils.helpers import ensure_directory

logger = get_logger(__name__)

ROLL_PITCH_LIMIT = math.radians(45.0)
VFOV_RANGE = (math.radians(20.0), math.radians(105.0))
K_HAT_STD = 0.07
K_HAT_BOUND = 0.3
OUTLIER_CONFIDENCE = 0.05
MAX_REDRAWS = 1000

SeedLike = Union[int, np.random.SeedSequence]


class ConfMode(str, Enum):
    """Confidence maps attached to noisy fields."""
    UNIT = "unit"
    ORACLE_INLIER = "oracle-inlier"


class NoiseSpec(BaseModel):
    """
    Field corruption: Gaussian angle noise plus uniform outliers.

    Per-pixel noise is independent. ``sigma_lat_bias_deg`` adds a coherent
    error instead: one offset drawn per field and added to every latitude,
    the way a predicted horizon sits too high or too low as a whole.
    """

    model_config = ConfigDict(frozen=True)

    sigma_up_deg: float = Field(default=0.0, ge=0.0, description="Std of up-vector rotation")
    sigma_lat_deg: float = Field(default=0.0, ge=0.0, description="Std of latitude noise")
    sigma_lat_bias_deg: float = Field(
        default=0.0, ge=0.0, description="Std of one latitude offset shared by the whole field"
    )
    outlier_frac: float = Field(default=0.0, ge=0.0, le=1.0, description="Fraction of outlier pixels")
    conf_mode: ConfMode = Field(default=ConfMode.UNIT, description="Confidence map mode")

    @property
    def is_clean(self) -> bool:
        return (
            self.sigma_up_deg == 0.0
            and self.sigma_lat_deg == 0.0
            and self.sigma_lat_bias_deg == 0.0
            and self.outlier_frac == 0.0
        )


@dataclass(eq=False)
class Scenario:
    """Ground truth plus the (possibly corrupted) field rendered from it."""
    params: CameraParams
    gravity: GravityDir
    field: PerspectiveField
    noise: NoiseSpec
    seed: np.random.SeedSequence
    outliers: np.ndarray


def _streams(seed: SeedLike):
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    # fresh copy: spawn() advances the sequence it is called on
    seq = np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key)
    children = np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key).spawn(3)
    return seq, [np.random.Generator(np.random.PCG64(s)) for s in children]


def batch_seeds(base: int, count: int):
    """Per-scenario seeds of a batch; scenario i always gets the same seed."""
    return np.random.SeedSequence(base).spawn(count)


def sample_k_hat(rng: np.random.Generator) -> float:
    bound = K_HAT_BOUND / K_HAT_STD
    return float(stats.truncnorm.rvs(-bound, bound, loc=0.0, scale=K_HAT_STD, random_state=rng))


def sample_parameters(
    rng: np.random.Generator,
    width: int,
    height: int,
    model: CameraModel = CameraModel.PINHOLE,
) -> Tuple[CameraParams, GravityDir]:
    """
    Draw a camera and gravity from the sampling ranges.

    Distortion draws whose image frame reaches past the invertible radius
    are redrawn; the geometry draw is kept.
    """
    model = CameraModel(model)
    roll = rng.uniform(-ROLL_PITCH_LIMIT, ROLL_PITCH_LIMIT)
    pitch = rng.uniform(-ROLL_PITCH_LIMIT, ROLL_PITCH_LIMIT)
    vfov = rng.uniform(*VFOV_RANGE)
    params = CameraParams.from_size(width, height, focal_from_vfov(vfov, height), model)

    if model is not CameraModel.PINHOLE:
        redraws = 0
        while True:
            candidate = params.with_distortion([sample_k_hat(rng) * vfov])
            if frame_radius(candidate) < invertible_radius(candidate):
                params = candidate
                break
            redraws += 1
            if redraws >= MAX_REDRAWS:
                logger.warning("No invertible distortion after %d draws; using k1 = 0", redraws)
                break
        if redraws:
            logger.warning(
                "Redrew distortion %d times: frame exceeded the invertible radius", redraws
            )
    return params, from_roll_pitch(roll, pitch)


def _rotate(up: np.ndarray, angle: np.ndarray) -> np.ndarray:
    ca, sa = np.cos(angle), np.sin(angle)
    return np.stack(
        [ca * up[..., 0] - sa * up[..., 1], sa * up[..., 0] + ca * up[..., 1]], axis=-1
    )


def perturb_field(
    field: PerspectiveField,
    noise: NoiseSpec,
    noise_rng: np.random.Generator,
    outlier_rng: np.random.Generator,
) -> Tuple[PerspectiveField, np.ndarray]:
    """
    Apply Gaussian noise, outliers and confidence maps to a field.

    Up-vectors are rotated (norm preserved). Latitudes are shifted per pixel
    and then by the field-wide offset, clamped to [-pi/2, pi/2]. A clean spec
    returns the field untouched.

    Returns:
        (field, outlier mask)
    """
    shape = field.latitude.shape
    if noise.is_clean and noise.conf_mode is ConfMode.UNIT:
        return field, np.zeros(shape, dtype=bool)

    up = field.up
    lat = field.latitude
    if noise.sigma_up_deg > 0:
        up = _rotate(up, noise_rng.normal(0.0, math.radians(noise.sigma_up_deg), size=shape))
    if noise.sigma_lat_deg > 0:
        lat = np.clip(
            lat + noise_rng.normal(0.0, math.radians(noise.sigma_lat_deg), size=shape),
            -np.pi / 2, np.pi / 2,
        )
    if noise.sigma_lat_bias_deg > 0:
        offset = noise_rng.normal(0.0, math.radians(noise.sigma_lat_bias_deg))
        lat = np.clip(lat + offset, -np.pi / 2, np.pi / 2)

    outliers = np.zeros(shape, dtype=bool)
    if noise.outlier_frac > 0:
        outliers = outlier_rng.random(shape) < noise.outlier_frac
        n_out = int(outliers.sum())
        theta = outlier_rng.uniform(0.0, 2.0 * np.pi, size=n_out)
        up = up.copy()
        lat = lat.copy()
        up[outliers] = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        lat[outliers] = outlier_rng.uniform(-np.pi / 2, np.pi / 2, size=n_out)

    conf_up, conf_lat = field.conf_up, field.conf_lat
    if noise.conf_mode is ConfMode.ORACLE_INLIER:
        scale = np.where(outliers, OUTLIER_CONFIDENCE, 1.0)
        conf_up = conf_up * scale
        conf_lat = conf_lat * scale

    return PerspectiveField(up, lat, conf_up, conf_lat), outliers


def sample_scenario(
    seed: SeedLike,
    width: int,
    height: int,
    model: CameraModel = CameraModel.PINHOLE,
    noise: NoiseSpec = NoiseSpec(),
) -> Scenario:
    """
    Generate a reproducible scenario.

    Args:
        seed: Integer seed or a spawned SeedSequence (see batch_seeds)
        width, height: Image size, at least 32 pixels each
        model: Camera model of the ground truth
        noise: Field corruption

    Raises:
        DomainError: Image smaller than 32 pixels
    """
    if width < 32 or height < 32:
        raise DomainError(f"Scenario images must be at least 32x32, got {width}x{height}")
    seq, (param_rng, noise_rng, outlier_rng) = _streams(seed)
    params, gravity = sample_parameters(param_rng, width, height, model)
    clean = render_field(params, gravity)
    field, outliers = perturb_field(clean, noise, noise_rng, outlier_rng)
    return Scenario(params, gravity, field, noise, seq, outliers)


# ==================== Scenario directories ====================

def scenario_stem(index: int) -> str:
    return f"{index:04d}"


def write_scenario(directory: Path, index: int, scenario: Scenario) -> str:
    """Write NNNN.pfld, NNNN.cam and NNNN.grav; returns the stem."""
    directory = Path(directory)
    ensure_directory(directory)
    stem = scenario_stem(index)
    save_field(scenario.field, directory / f"{stem}.pfld")
    save_camera(scenario.params, directory / f"{stem}.cam")
    save_gravity(scenario.gravity, directory / f"{stem}.grav")
    return stem


def load_scenario(directory: Path, stem: str):
    """Read a scenario triple back as (field, camera, gravity)."""
    directory = Path(directory)
    return (
        load_field(directory / f"{stem}.pfld"),
        load_camera(directory / f"{stem}.cam"),
        load_gravity(directory / f"{stem}.grav"),
    )
