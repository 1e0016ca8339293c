"""
Residuals and Jacobians of the perspective-field objective.

Each active pixel contributes three interleaved rows: the two components
of the up-vector residual and the latitude residual (on sin latitude),

    r_up  = up(theta) - up_observed           weight conf_up
    r_lat = sin lat(theta) - sin lat_observed  weight conf_lat

Parameters are perturbed in local coordinates: a 2-vector on the gravity
tangent plane, the log of the focal length and the distortion coefficients
themselves. Full column order is [dg (2), dlog f (1), dk (D)].
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..core.exceptions import DomainError
from ..core.logging import get_logger
from ..evaluation.synth import sample_parameters
from ..geometry.camera_model import CameraModel, CameraParams, normalize, undistort
from ..geometry.gravity_manifold import GravityDir, retract, tangent_basis
from ..geometry.perspective_field import (
    DEGENERATE_EPS,
    PerspectiveField,
    evaluate_field,
    pixel_centers,
)

logger = get_logger(__name__)

FD_STEP = 1e-6
ROWS_PER_PIXEL = 3

JACOBIAN_BLOCKS = ("up/g", "up/f", "up/k", "lat/g", "lat/f", "lat/k")


@dataclass(frozen=True)
class ParameterMask:
    """Which parameter groups of one image are free."""
    gravity: bool = True
    focal: bool = True
    distortion: bool = True

    def columns(self, model: CameraModel) -> List[int]:
        """Indices of the free columns within the full column layout."""
        cols: List[int] = []
        if self.gravity:
            cols += [0, 1]
        if self.focal:
            cols.append(2)
        if self.distortion:
            cols += list(range(3, 3 + model.num_distortion))
        return cols

    def size(self, model: CameraModel) -> int:
        return len(self.columns(model))


@dataclass
class ResidualBlock:
    """
    Stacked residuals, weights and (optionally) Jacobian of one image.

    Attributes:
        r: (3M,) residuals, rows [up_x, up_y, lat] per pixel
        w: (3M,) weights
        valid: (M,) pixels where the model is defined
        J: (3M, P) Jacobian over the free columns, if requested
    """
    r: np.ndarray
    w: np.ndarray
    valid: np.ndarray
    J: Optional[np.ndarray] = None

    @property
    def cost(self) -> float:
        return float(np.sum(self.w * self.r * self.r))

    @property
    def n_invalid(self) -> int:
        return int(np.count_nonzero(~self.valid))

    @property
    def n_obs(self) -> int:
        """Observation count: one per weighted up-vector and per weighted latitude."""
        w = self.w.reshape(-1, ROWS_PER_PIXEL)
        return int(np.count_nonzero(w[:, 0] > 0) + np.count_nonzero(w[:, 2] > 0))

    def normal_equations(self):
        """(H, b) = (J^T W J, J^T W r)."""
        if self.J is None:
            raise DomainError("Residual block was built without a Jacobian")
        wj = self.J * self.w[:, None]
        return self.J.T @ wj, wj.T @ self.r


def active_pixels(field: PerspectiveField, stride: int = 1) -> np.ndarray:
    """(row, col) indices of the regular stride subgrid of a field."""
    if stride < 1:
        raise DomainError(f"Stride must be >= 1, got {stride}")
    _, index = pixel_centers(field.width, field.height, stride)
    return index


def _points(index: np.ndarray) -> np.ndarray:
    return np.stack([index[:, 1] + 0.5, index[:, 0] + 0.5], axis=-1).astype(float)


def model_values(params: CameraParams, g: GravityDir, points):
    """
    Model rows at pixel coordinates.

    Returns:
        (values, valid) with values (M, 3) as [up_x, up_y, sin lat]
    """
    sample = evaluate_field(params, g, points)
    values = np.concatenate([sample.up, sample.sin_lat[:, None]], axis=-1)
    return values, sample.valid


def _analytic_jacobian(params: CameraParams, g: GravityDir, points: np.ndarray):
    gv = g.vec
    qd = normalize(params, points)
    q, valid = undistort(params, qd, strict=False)
    m = q.shape[0]
    n_dist = params.model.num_distortion
    eye = np.broadcast_to(np.eye(2), (m, 2, 2))

    s = np.sum(q * q, axis=-1)
    ubar = q * gv[2] - gv[:2]
    qu = np.sum(q * ubar, axis=-1)
    qq = q[:, :, None] * q[:, None, :]

    if params.model is CameraModel.PINHOLE:
        d = np.ones(m)
        c = np.zeros(m)
    else:
        d = 1.0 + params.k1 * s + params.k2 * s * s
        c = 2.0 * (params.k1 + 2.0 * params.k2 * s)
    amat = d[:, None, None] * eye + c[:, None, None] * qq
    w = np.einsum("mij,mj->mi", amat, ubar)
    norm = np.sqrt(np.sum(w * w, axis=-1))
    valid &= norm >= DEGENERATE_EPS
    safe_norm = np.where(valid, norm, 1.0)
    up = w / safe_norm[:, None]

    # dw/dg in ambient coordinates
    gmat = np.zeros((m, 2, 3))
    gmat[:, 0, 0] = -1.0
    gmat[:, 1, 1] = -1.0
    gmat[:, :, 2] = q
    dw_dg = amat @ gmat

    # dw/dq at fixed parameters
    dw_dq = (
        (c * qu + d * gv[2])[:, None, None] * eye
        + c[:, None, None] * (ubar[:, :, None] * q[:, None, :] + q[:, :, None] * ubar[:, None, :])
        + (8.0 * params.k2 * qu + c * gv[2])[:, None, None] * qq
    )

    # dq/d(log f, k) through the undistortion: A dq = -dD
    rhs = [-qd, -s[:, None] * q, -(s * s)[:, None] * q][: 1 + n_dist]
    rhs = np.stack(rhs, axis=-1)
    a_safe = np.where(valid[:, None, None], amat, eye)
    dq_dt = np.linalg.solve(a_safe, rhs)

    dw_dt = dw_dq @ dq_dt
    if n_dist >= 1:
        dw_dt[:, :, 1] += s[:, None] * ubar + 2.0 * qu[:, None] * q
    if n_dist >= 2:
        dw_dt[:, :, 2] += (s * s)[:, None] * ubar + 4.0 * (s * qu)[:, None] * q

    basis = tangent_basis(g)
    dw = np.concatenate([dw_dg @ basis, dw_dt], axis=-1)
    proj = (eye - up[:, :, None] * up[:, None, :]) / safe_norm[:, None, None]
    dup = proj @ dw

    n_norm = np.sqrt(s + 1.0)
    ng = q @ gv[:2] + gv[2]
    dsin_dg = np.concatenate([q, np.ones((m, 1))], axis=-1) / n_norm[:, None]
    dsin_dq = gv[:2][None, :] / n_norm[:, None] - (ng / n_norm ** 3)[:, None] * q
    dsin = np.concatenate(
        [dsin_dg @ basis, np.einsum("mi,mij->mj", dsin_dq, dq_dt)], axis=-1
    )

    jac = np.concatenate([dup, dsin[:, None, :]], axis=1)
    jac[~valid] = 0.0
    return jac, valid


def _perturbed(params: CameraParams, g: GravityDir, delta: np.ndarray):
    g2 = retract(g, delta[:2])
    p2 = params.with_focal(params.f * np.exp(delta[2]))
    if params.model.num_distortion:
        p2 = p2.with_distortion(params.k + delta[3:])
    return p2, g2


def _numeric_jacobian(params: CameraParams, g: GravityDir, points: np.ndarray, h: float = FD_STEP):
    n_cols = 3 + params.model.num_distortion
    _, valid = model_values(params, g, points)
    jac = np.zeros((points.shape[0], ROWS_PER_PIXEL, n_cols))
    for col in range(n_cols):
        delta = np.zeros(n_cols)
        delta[col] = h
        plus, ok_p = model_values(*_perturbed(params, g, delta), points)
        minus, ok_m = model_values(*_perturbed(params, g, -delta), points)
        jac[:, :, col] = (plus - minus) / (2.0 * h)
        valid &= ok_p & ok_m
    jac[~valid] = 0.0
    return jac, valid


def model_jacobian(params: CameraParams, g: GravityDir, points, method: str = "analytic"):
    """
    Per-pixel Jacobian of the model rows over the full column layout.

    Args:
        method: "analytic" or "numeric" (central differences)

    Returns:
        (J, valid) with J of shape (M, 3, 3 + D)
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if method == "analytic":
        return _analytic_jacobian(params, g, points)
    if method == "numeric":
        return _numeric_jacobian(params, g, points)
    raise DomainError(f"Unknown Jacobian method '{method}'")


def _observed(field: PerspectiveField, index: np.ndarray):
    rows, cols = index[:, 0], index[:, 1]
    obs = np.concatenate(
        [field.up[rows, cols], np.sin(field.latitude[rows, cols])[:, None]], axis=-1
    )
    weights = np.stack(
        [field.conf_up[rows, cols], field.conf_up[rows, cols], field.conf_lat[rows, cols]],
        axis=-1,
    )
    return obs, weights


def residuals(
    params: CameraParams,
    g: GravityDir,
    field: PerspectiveField,
    active: Optional[np.ndarray] = None,
    stride: int = 1,
) -> ResidualBlock:
    """
    Weighted residuals of a field against the model.

    Pixels where the model is undefined get zero residual and zero weight.

    Raises:
        DimensionMismatchError: Field and camera sizes differ
    """
    field.check_camera(params)
    index = active_pixels(field, stride) if active is None else np.asarray(active)
    values, valid = model_values(params, g, _points(index))
    obs, weights = _observed(field, index)
    r = np.where(valid[:, None], values - obs, 0.0)
    w = np.where(valid[:, None], weights, 0.0)
    return ResidualBlock(r=r.ravel(), w=w.ravel(), valid=valid)


def jacobian(
    params: CameraParams,
    g: GravityDir,
    field: PerspectiveField,
    active: Optional[np.ndarray] = None,
    stride: int = 1,
    mask: ParameterMask = ParameterMask(),
    method: str = "analytic",
) -> ResidualBlock:
    """
    Residuals together with the Jacobian over the free columns of ``mask``.

    Raises:
        DimensionMismatchError: Field and camera sizes differ
    """
    block = residuals(params, g, field, active=active, stride=stride)
    index = active_pixels(field, stride) if active is None else np.asarray(active)
    jac, valid = model_jacobian(params, g, _points(index), method=method)
    jac[~block.valid] = 0.0
    cols = mask.columns(params.model)
    block.J = jac.reshape(-1, jac.shape[-1])[:, cols]
    return block


# ==================== Finite-difference check ====================

@dataclass
class JacobianCheckReport:
    """Maximum relative error per Jacobian block over all trials."""
    trials: int
    errors: Dict[str, float] = field(default_factory=lambda: {b: 0.0 for b in JACOBIAN_BLOCKS})
    checked: Dict[str, int] = field(default_factory=lambda: {b: 0 for b in JACOBIAN_BLOCKS})

    @property
    def max_error(self) -> float:
        return max(self.errors.values())

    def passed(self, tol: float = 1e-5) -> bool:
        return self.max_error < tol


def _well_conditioned(params: CameraParams, g: GravityDir, points: np.ndarray) -> np.ndarray:
    q, valid = undistort(params, normalize(params, points), strict=False)
    s = np.sum(q * q, axis=-1)
    profile = 1.0 + 3.0 * params.k1 * s + 5.0 * params.k2 * s * s
    ubar = q * g.vec[2] - g.vec[:2]
    return valid & (profile >= 0.05) & (np.linalg.norm(ubar, axis=-1) >= 0.05)


def check_jacobians(
    seed: int,
    trials: int,
    n_pixels: int = 64,
    width: int = 320,
    height: int = 240,
) -> JacobianCheckReport:
    """
    Compare analytic Jacobians with central differences on random cameras.

    Trials cycle through the pinhole, radial1 and radial2 models. Entries
    are compared as |a - n| / max(|n|, 1e-3).
    """
    report = JacobianCheckReport(trials=trials)
    models = [CameraModel.PINHOLE, CameraModel.RADIAL1, CameraModel.RADIAL2]
    for t, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.Generator(np.random.PCG64(child))
        model = models[t % len(models)]
        params, g = sample_parameters(rng, width, height, model)
        if model is CameraModel.RADIAL2:
            params = params.with_distortion([params.k1, rng.uniform(-0.02, 0.02)])
        points = rng.uniform([0.0, 0.0], [width, height], size=(n_pixels, 2))
        points = points[_well_conditioned(params, g, points)]
        if points.shape[0] == 0:
            continue

        analytic, ok_a = model_jacobian(params, g, points, method="analytic")
        numeric, ok_n = model_jacobian(params, g, points, method="numeric")
        ok = ok_a & ok_n
        analytic, numeric = analytic[ok], numeric[ok]
        rel = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-3)

        spans = {"g": slice(0, 2), "f": slice(2, 3), "k": slice(3, None)}
        for name in JACOBIAN_BLOCKS:
            rows = slice(0, 2) if name.startswith("up") else slice(2, 3)
            block = rel[:, rows, spans[name.split("/")[1]]]
            if block.size:
                report.errors[name] = max(report.errors[name], float(block.max()))
                report.checked[name] += int(block.size)
        logger.debug("trial %d (%s): max error %.3e", t, model.value, float(rel.max(initial=0.0)))
    return report
