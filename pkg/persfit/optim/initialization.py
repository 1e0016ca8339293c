"""
Initialization strategies for the calibrator.

Strategies live in a registry, each with a name, a description and an
initializer callable mapping a field to (gravity, focal):

- trivial: upright gravity, f = 0.7 max(W, H)
- heuristic: gravity from the field at the image center, focal from the
  latitude span of the center column
- solver: RANSAC over minimal samples of two up-vectors and one latitude

To add a strategy, build an InitStrategy and pass it to
register_init_strategy().
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize as sp_optimize

from ..core.exceptions import (
    DegenerateHeuristicError,
    DomainError,
    InsufficientSamplesError,
    InvalidConfigError,
    NoHypothesisError,
)
from ..core.logging import get_logger
from ..geometry.camera_model import CameraParams, focal_from_vfov
from ..geometry.gravity_manifold import GravityDir
from ..geometry.perspective_field import (
    PerspectiveField,
    evaluate_field,
    pixel_centers,
    sample_field,
)

logger = get_logger(__name__)

TRIVIAL_FOCAL_SCALE = 0.7
SCAN_VFOV_DEG = (5.0, 170.0)
SCAN_POINTS = 64
ROOT_TOL = 1e-6

Initialization = Tuple[GravityDir, float]


class RansacConfig(BaseModel):
    """Minimal-solver RANSAC settings."""

    model_config = ConfigDict(frozen=True)

    iterations: int = Field(default=100, gt=0, description="Number of minimal samples")
    up_threshold_deg: float = Field(default=2.0, gt=0, description="Up-vector inlier angle")
    lat_threshold_deg: float = Field(default=2.0, gt=0, description="Latitude inlier angle")
    seed: int = Field(default=0, ge=0, description="Sampler seed")
    stride: int = Field(default=4, ge=1, description="Scoring subgrid stride")


# ==================== Trivial ====================

def init_trivial(width: int, height: int) -> Initialization:
    """Upright gravity and f = 0.7 max(W, H)."""
    if width < 1 or height < 1:
        raise DomainError(f"Image size must be positive, got {width}x{height}")
    return GravityDir.upright(), TRIVIAL_FOCAL_SCALE * max(width, height)


# ==================== Heuristic ====================

def init_heuristic(field: PerspectiveField) -> Initialization:
    """
    Read gravity and focal length directly off the field.

    At the principal point the up-vector is -(gx, gy) normalized and the
    latitude is asin(gz). The focal length comes from the latitude span of
    the center column, bottom row minus top row.

    Raises:
        DegenerateHeuristicError: Pole latitude at the center, or a latitude
            span outside (0, pi)
    """
    w, h = field.width, field.height
    cx, cy = w / 2.0, h / 2.0
    up_c, lat_c = sample_field(field, [cx], [cy])
    gz = math.sin(float(lat_c[0]))
    if abs(gz) >= 1.0 - 1e-12:
        raise DegenerateHeuristicError("Center latitude is at a pole; roll is unobservable")
    alpha = math.sqrt(1.0 - gz * gz)
    gravity = GravityDir(np.array([-alpha * up_c[0, 0], -alpha * up_c[0, 1], gz]))

    _, lat_ends = sample_field(field, [cx, cx], [0.5, h - 0.5])
    span = float(lat_ends[1] - lat_ends[0])
    if not (0.0 < span < math.pi) or h < 2:
        raise DegenerateHeuristicError(
            f"Latitude span {math.degrees(span):.3f} deg of the center column is unusable"
        )
    return gravity, focal_from_vfov(span, h - 1)


# ==================== Minimal solver ====================

@dataclass
class RansacResult:
    """Best hypothesis with its full-grid inlier masks."""
    gravity: GravityDir
    focal: float
    score: float
    inlier_up: np.ndarray
    inlier_lat: np.ndarray
    n_hypotheses: int


def _constraint(up: np.ndarray, q: np.ndarray) -> np.ndarray:
    # up x (u gz - gx, v gz - gy) = 0 is linear in g
    return np.stack(
        [up[..., 1] * np.ones_like(q[..., 0]), -up[..., 0] * np.ones_like(q[..., 0]),
         up[..., 0] * q[..., 1] - up[..., 1] * q[..., 0]],
        axis=-1,
    )


def _gravity_from_pair(up_i, up_j, q_i, q_j) -> Tuple[np.ndarray, np.ndarray]:
    """Gravity candidates (F, 3) for focal candidates along the leading axis."""
    g = np.cross(_constraint(up_i, q_i), _constraint(up_j, q_j))
    norm = np.linalg.norm(g, axis=-1)
    ok = norm > 1e-12
    g = g / np.where(ok, norm, 1.0)[..., None]
    ubar = q_i * g[..., 2:3] - g[..., :2]
    sign = np.where(np.sum(ubar * up_i, axis=-1) < 0.0, -1.0, 1.0)
    return g * sign[..., None], ok


def _solve_sample(field: PerspectiveField, px_i, px_j, px_k, up_i, up_j, sin_k) -> List[Initialization]:
    c = np.array([field.width / 2.0, field.height / 2.0])
    lo = focal_from_vfov(math.radians(SCAN_VFOV_DEG[1]), field.height)
    hi = focal_from_vfov(math.radians(SCAN_VFOV_DEG[0]), field.height)

    def latitude_gap(f):
        f = np.atleast_1d(np.asarray(f, dtype=float))[:, None]
        q_i, q_j, q_k = (px_i - c) / f, (px_j - c) / f, (px_k - c) / f
        g, ok = _gravity_from_pair(up_i, up_j, q_i, q_j)
        n = np.concatenate([q_k, np.ones((q_k.shape[0], 1))], axis=-1)
        gap = np.sum(n * g, axis=-1) / np.linalg.norm(n, axis=-1) - sin_k
        return np.where(ok, gap, np.nan), g

    grid = np.geomspace(lo, hi, SCAN_POINTS)
    gaps, _ = latitude_gap(grid)
    roots: List[Initialization] = []
    for a, b, ga, gb in zip(grid[:-1], grid[1:], gaps[:-1], gaps[1:]):
        if not (np.isfinite(ga) and np.isfinite(gb)) or ga * gb > 0.0:
            continue
        try:
            f = float(sp_optimize.brentq(lambda x: float(latitude_gap(x)[0][0]), a, b, xtol=1e-10))
        except (ValueError, RuntimeError):
            continue
        gap, g = latitude_gap(f)
        if np.isfinite(gap[0]) and abs(gap[0]) < ROOT_TOL:
            roots.append((GravityDir(g[0]), f))
    return roots


def _inliers(field, points, index, g: GravityDir, f: float, cfg: RansacConfig):
    params = CameraParams.from_size(field.width, field.height, f)
    sample = evaluate_field(params, g, points)
    rows, cols = index[:, 0], index[:, 1]
    obs_up = field.up[rows, cols]
    cos_err = np.clip(np.sum(sample.up * obs_up, axis=-1), -1.0, 1.0)
    in_up = sample.valid & (cos_err >= math.cos(math.radians(cfg.up_threshold_deg)))
    lat_err = np.abs(sample.latitude - field.latitude[rows, cols])
    in_lat = sample.ray_valid & (lat_err <= math.radians(cfg.lat_threshold_deg))
    in_up &= field.conf_up[rows, cols] > 0
    in_lat &= field.conf_lat[rows, cols] > 0
    score = float(np.sum(field.conf_up[rows, cols][in_up]) + np.sum(field.conf_lat[rows, cols][in_lat]))
    return score, in_up, in_lat


def ransac_solve(field: PerspectiveField, cfg: Optional[RansacConfig] = None) -> RansacResult:
    """
    Robust (gravity, focal) estimate from minimal samples.

    Each sample draws two confident up-vectors and one confident latitude;
    every focal length that satisfies the latitude is a hypothesis, scored
    by the summed confidence of its inliers on a stride subgrid.

    Raises:
        InsufficientSamplesError: Fewer than two up-vectors or no latitude
            with positive confidence
        NoHypothesisError: Every sample was degenerate
    """
    cfg = cfg or RansacConfig()
    all_points, all_index = pixel_centers(field.width, field.height)
    flat_conf_up = field.conf_up.ravel()
    flat_conf_lat = field.conf_lat.ravel()
    up_pool = np.flatnonzero(flat_conf_up > 0)
    lat_pool = np.flatnonzero(flat_conf_lat > 0)
    if up_pool.size < 2 or lat_pool.size < 1:
        raise InsufficientSamplesError(
            f"Need 2 confident up-vectors and 1 latitude, got {up_pool.size} and {lat_pool.size}"
        )

    points, index = pixel_centers(field.width, field.height, cfg.stride)
    flat_up = field.up.reshape(-1, 2)
    flat_sin = np.sin(field.latitude.ravel())
    rng = np.random.Generator(np.random.PCG64(cfg.seed))

    best: Optional[Tuple[float, GravityDir, float]] = None
    n_hyp = 0
    for _ in range(cfg.iterations):
        i, j = rng.choice(up_pool, size=2, replace=False)
        k = rng.choice(lat_pool)
        for g, f in _solve_sample(
            field, all_points[i], all_points[j], all_points[k],
            flat_up[i], flat_up[j], flat_sin[k],
        ):
            n_hyp += 1
            score, _, _ = _inliers(field, points, index, g, f, cfg)
            if best is None or score > best[0]:
                best = (score, g, f)

    if best is None:
        raise NoHypothesisError(f"All {cfg.iterations} minimal samples were degenerate")

    score, g, f = best
    _, in_up, in_lat = _inliers(field, all_points, all_index, g, f, cfg)
    shape = field.latitude.shape
    logger.info("RANSAC: %d hypotheses, best score %.3f, f=%.3f", n_hyp, score, f)
    return RansacResult(
        gravity=g, focal=f, score=score,
        inlier_up=in_up.reshape(shape), inlier_lat=in_lat.reshape(shape),
        n_hypotheses=n_hyp,
    )


def init_solver(field: PerspectiveField, cfg: Optional[RansacConfig] = None) -> Initialization:
    result = ransac_solve(field, cfg)
    return result.gravity, result.focal


# ==================== Registry ====================

@dataclass
class InitStrategy:
    """
    Metadata for an initialization strategy.

    Attributes:
        name: Identifier used on the command line
        description: Short description for help output
        initializer: Maps (field, ransac config) to (gravity, focal)
        fallback: Strategy to use when this one reports a degenerate field
    """
    name: str
    description: str
    initializer: Callable[[PerspectiveField, RansacConfig], Initialization] = field(default=None)
    fallback: Optional[str] = None


INIT_REGISTRY: Dict[str, InitStrategy] = {}


def validate_init_strategy(strategy: InitStrategy) -> None:
    """
    Validate strategy metadata before registration.

    Raises:
        InvalidConfigError: Missing name or description, non-callable
            initializer, or a fallback pointing to itself
    """
    if not strategy.name:
        raise InvalidConfigError("Init strategy missing 'name' field")
    if not strategy.name.isidentifier():
        raise InvalidConfigError(
            f"Init strategy name '{strategy.name}' is not a valid identifier"
        )
    if not strategy.description:
        raise InvalidConfigError(f"Init strategy '{strategy.name}' missing 'description' field")
    if not callable(strategy.initializer):
        raise InvalidConfigError(
            f"Init strategy '{strategy.name}' initializer is not callable. "
            f"Got type: {type(strategy.initializer).__name__}"
        )
    if strategy.fallback == strategy.name:
        raise InvalidConfigError(f"Init strategy '{strategy.name}' cannot fall back to itself")


def register_init_strategy(strategy: InitStrategy) -> None:
    """Register a strategy in the global registry after validation."""
    validate_init_strategy(strategy)
    INIT_REGISTRY[strategy.name] = strategy


def get_init_strategy(name: str) -> InitStrategy:
    strategy = INIT_REGISTRY.get(name)
    if strategy is None:
        raise InvalidConfigError(
            f"Unknown init strategy '{name}'. Available: {', '.join(sorted(INIT_REGISTRY))}"
        )
    return strategy


def available_init_strategies() -> Dict[str, InitStrategy]:
    return INIT_REGISTRY.copy()


def run_initializer(
    name: str,
    field: PerspectiveField,
    ransac_cfg: Optional[RansacConfig] = None,
) -> Initialization:
    """Run a registered strategy, following its fallback on a degenerate field."""
    strategy = get_init_strategy(name)
    try:
        return strategy.initializer(field, ransac_cfg or RansacConfig())
    except DegenerateHeuristicError as exc:
        if strategy.fallback is None:
            raise
        logger.warning("%s; falling back to %s initialization", exc.detail, strategy.fallback)
        return run_initializer(strategy.fallback, field, ransac_cfg)


register_init_strategy(InitStrategy(
    name="trivial",
    description="Upright gravity, focal 0.7 max(W, H)",
    initializer=lambda fld, _cfg: init_trivial(fld.width, fld.height),
))
register_init_strategy(InitStrategy(
    name="heuristic",
    description="Gravity and focal read off the field center",
    initializer=lambda fld, _cfg: init_heuristic(fld),
    fallback="trivial",
))
register_init_strategy(InitStrategy(
    name="solver",
    description="RANSAC over two up-vectors and one latitude",
    initializer=init_solver,
))
