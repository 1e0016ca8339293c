"""
Calibration problems: parameter layout, priors, multi-image coupling and
mapping of the optimizer's covariance to named uncertainties.

The parameter vector is laid out as

    [dg image 0, dg image 1, ..., dlog f, dk]

with fixed groups left out. Priors append whitened rows (value - prior) / std
with unit weight; they also seed the initial value of their parameter.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import (
    EmptyProblemError,
    OptimizationFailedError,
    ProblemLayoutError,
)
from ..core.logging import get_logger
from ..geometry.camera_model import CameraModel, CameraParams
from ..geometry.gravity_manifold import (
    GravityDir,
    retract,
    roll_pitch,
    roll_pitch_jacobian,
    tangent_basis,
)
from ..geometry.perspective_field import PerspectiveField
from .initialization import RansacConfig, run_initializer
from .jacobians import ParameterMask, active_pixels, jacobian, residuals
from .lm_optimizer import Linearization, LMConfig, LMStatus, LMTrace, optimize

logger = get_logger(__name__)


class Sharing(str, Enum):
    """How parameters are coupled across images."""
    INDEPENDENT = "none"
    SHARED_INTRINSICS = "intrinsics"
    SHARED_GRAVITY = "gravity"


@dataclass(frozen=True)
class Prior:
    """Gaussian prior: value and standard deviation (in the parameter's units)."""
    value: Union[float, Sequence[float], GravityDir]
    std: float

    def __post_init__(self) -> None:
        if not (self.std > 0 and math.isfinite(self.std)):
            raise ProblemLayoutError(f"Prior standard deviation must be positive, got {self.std}")


@dataclass
class CalibrationProblem:
    """
    One calibration task over one or more fields.

    Attributes:
        fields: Observed perspective fields
        model: Camera model to fit
        sharing: Coupling across images
        init: Name of a registered initialization strategy
        stride: Pixel subsampling stride
        fix_gravity / fix_focal / fix_distortion: Hard constraints
        prior_gravity / prior_focal / prior_distortion: Soft constraints
        initial_gravity / initial_focal: Override the strategy's start
        principal_point: Defaults to the image center
    """
    fields: List[PerspectiveField]
    model: CameraModel = CameraModel.PINHOLE
    sharing: Sharing = Sharing.INDEPENDENT
    init: str = "trivial"
    stride: int = 1
    fix_gravity: Optional[GravityDir] = None
    fix_focal: Optional[float] = None
    fix_distortion: Optional[Sequence[float]] = None
    prior_gravity: Optional[Prior] = None
    prior_focal: Optional[Prior] = None
    prior_distortion: Optional[Prior] = None
    initial_gravity: Optional[GravityDir] = None
    initial_focal: Optional[float] = None
    principal_point: Optional[Tuple[float, float]] = None
    lm: LMConfig = field(default_factory=LMConfig)
    ransac: RansacConfig = field(default_factory=RansacConfig)

    def __post_init__(self) -> None:
        self.model = CameraModel(self.model)
        self.sharing = Sharing(self.sharing)

    @property
    def n_images(self) -> int:
        return len(self.fields)

    @property
    def mask(self) -> ParameterMask:
        return ParameterMask(
            gravity=self.fix_gravity is None,
            focal=self.fix_focal is None,
            distortion=self.fix_distortion is None and self.model.num_distortion > 0,
        )

    def validate(self) -> None:
        """
        Check the layout invariants.

        Raises:
            EmptyProblemError: No fields
            ProblemLayoutError: Fixed-and-prior parameter, size mismatch,
                independent layout over several images, bad stride
            NotImplementedError: Shared gravity across images
        """
        if not self.fields:
            raise EmptyProblemError("Calibration problem has no images")
        if self.sharing is Sharing.SHARED_GRAVITY:
            raise NotImplementedError("Shared gravity across a camera rig is not implemented")
        if self.sharing is Sharing.INDEPENDENT and self.n_images > 1:
            raise ProblemLayoutError(
                "Independent calibration takes one image per problem; "
                "calibrate the images separately or share intrinsics"
            )
        sizes = {f.size for f in self.fields}
        if len(sizes) > 1:
            raise ProblemLayoutError(f"Shared intrinsics need equal image sizes, got {sorted(sizes)}")
        for name in ("gravity", "focal", "distortion"):
            if getattr(self, f"fix_{name}") is not None and getattr(self, f"prior_{name}") is not None:
                raise ProblemLayoutError(f"{name} cannot be both fixed and prior-regularized")
        if self.fix_gravity is not None and self.n_images > 1:
            raise ProblemLayoutError("A fixed gravity applies to a single image")
        if self.stride < 1:
            raise ProblemLayoutError(f"Stride must be >= 1, got {self.stride}")
        n_dist = self.model.num_distortion
        for label, k in (("fixed", self.fix_distortion),
                         ("prior", self.prior_distortion.value if self.prior_distortion else None)):
            if k is not None and len(np.atleast_1d(k)) != n_dist:
                raise ProblemLayoutError(
                    f"{label} distortion needs {n_dist} coefficient(s) for {self.model.value}"
                )

    def base_camera(self, focal: float, k: Sequence[float] = ()) -> CameraParams:
        w, h = self.fields[0].size
        cx, cy = self.principal_point or (w / 2.0, h / 2.0)
        return CameraParams(
            model=self.model, f=float(focal), cx=cx, cy=cy, width=w, height=h,
        ).with_distortion(list(k))


@dataclass(eq=False)
class CalibrationState:
    """Current estimate: one gravity per image plus shared intrinsics."""
    gravities: List[GravityDir]
    focal: float
    k: np.ndarray


class CalibrationObjective:
    """Weighted least-squares objective of a problem, in the optimizer's interface."""

    def __init__(self, problem: CalibrationProblem, method: str = "analytic"):
        self.problem = problem
        self.method = method
        self.mask = problem.mask
        self.n_dist = problem.model.num_distortion
        n = problem.n_images
        self.n_grav = 2 * n if self.mask.gravity else 0
        self.focal_idx = self.n_grav if self.mask.focal else None
        self.k_start = self.n_grav + (1 if self.mask.focal else 0)
        self.n_k = self.n_dist if self.mask.distortion else 0
        self.n_params = self.k_start + self.n_k
        self.active = [active_pixels(f, problem.stride) for f in problem.fields]

    # ---- layout ----
    def columns(self, image: int) -> List[int]:
        cols: List[int] = []
        if self.mask.gravity:
            cols += [2 * image, 2 * image + 1]
        if self.mask.focal:
            cols.append(self.focal_idx)
        cols += list(range(self.k_start, self.k_start + self.n_k))
        return cols

    def names(self) -> List[str]:
        out: List[str] = []
        if self.mask.gravity:
            for i in range(self.problem.n_images):
                out += [f"g{i}.t1", f"g{i}.t2"]
        if self.mask.focal:
            out.append("log_f")
        out += [f"k{j + 1}" for j in range(self.n_k)]
        return out

    def camera(self, state: CalibrationState) -> CameraParams:
        return self.problem.base_camera(state.focal, state.k)

    # ---- priors ----
    def _prior_terms(self, state: CalibrationState):
        """Whitened prior rows as (residual, jacobian rows, columns)."""
        terms = []
        p = self.problem
        if p.prior_focal is not None and self.mask.focal:
            std = p.prior_focal.std
            r = np.array([(state.focal - float(p.prior_focal.value)) / std])
            terms.append((r, np.array([[state.focal / std]]), [self.focal_idx]))
        if p.prior_gravity is not None and self.mask.gravity:
            g0 = p.prior_gravity.value
            g0 = g0.vec if isinstance(g0, GravityDir) else GravityDir(np.asarray(g0)).vec
            std = p.prior_gravity.std
            for i, g in enumerate(state.gravities):
                r = (g.vec - g0) / std
                terms.append((r, tangent_basis(g) / std, [2 * i, 2 * i + 1]))
        if p.prior_distortion is not None and self.n_k:
            k0 = np.atleast_1d(np.asarray(p.prior_distortion.value, dtype=float))
            std = p.prior_distortion.std
            cols = list(range(self.k_start, self.k_start + self.n_k))
            terms.append(((state.k - k0) / std, np.eye(self.n_k) / std, cols))
        return terms

    # ---- optimizer interface ----
    def linearize(self, state: CalibrationState) -> Linearization:
        H = np.zeros((self.n_params, self.n_params))
        b = np.zeros(self.n_params)
        cost, n_obs, n_invalid = 0.0, 0, 0
        params = self.camera(state)
        for i, (fld, g) in enumerate(zip(self.problem.fields, state.gravities)):
            block = jacobian(
                params, g, fld, active=self.active[i], mask=self.mask, method=self.method
            )
            hl, bl = block.normal_equations()
            cols = self.columns(i)
            H[np.ix_(cols, cols)] += hl
            b[cols] += bl
            cost += block.cost
            n_obs += block.n_obs
            n_invalid += block.n_invalid
        for r, jac, cols in self._prior_terms(state):
            H[np.ix_(cols, cols)] += jac.T @ jac
            b[cols] += jac.T @ r
            cost += float(r @ r)
            n_obs += r.size
        return Linearization(H=H, b=b, cost=cost, n_obs=n_obs, n_invalid=n_invalid)

    def evaluate(self, state: CalibrationState) -> Tuple[float, int]:
        cost, n_invalid = 0.0, 0
        params = self.camera(state)
        for i, (fld, g) in enumerate(zip(self.problem.fields, state.gravities)):
            block = residuals(params, g, fld, active=self.active[i])
            cost += block.cost
            n_invalid += block.n_invalid
        for r, _, _ in self._prior_terms(state):
            cost += float(r @ r)
        return cost, n_invalid

    def retract(self, state: CalibrationState, delta: np.ndarray) -> CalibrationState:
        gravities = list(state.gravities)
        if self.mask.gravity:
            gravities = [retract(g, delta[2 * i: 2 * i + 2]) for i, g in enumerate(gravities)]
        focal = state.focal * math.exp(delta[self.focal_idx]) if self.mask.focal else state.focal
        k = state.k + delta[self.k_start: self.k_start + self.n_k] if self.n_k else state.k
        return CalibrationState(gravities=gravities, focal=focal, k=k)


# ==================== Results ====================

@dataclass
class ImageGravity:
    """Estimated gravity of one image with its uncertainties (radians)."""
    gravity: GravityDir
    sigma_gravity: float = 0.0
    sigma_roll: float = 0.0
    sigma_pitch: float = 0.0

    @property
    def roll(self) -> float:
        return roll_pitch(self.gravity)[0]

    @property
    def pitch(self) -> float:
        return roll_pitch(self.gravity)[1]


@dataclass
class CalibrationResult:
    """
    Fitted camera and gravities with first-order uncertainties.

    sigma_vfov is |d vfov / d log f| * sigma_log_f; fixed parameters report 0.
    """
    camera: CameraParams
    gravities: List[ImageGravity]
    sigma_focal: float
    sigma_log_focal: float
    sigma_vfov: float
    sigma_k: np.ndarray
    covariance: np.ndarray
    parameter_names: List[str]
    trace: LMTrace

    @property
    def status(self) -> LMStatus:
        return self.trace.status

    @property
    def gravity(self) -> GravityDir:
        return self.gravities[0].gravity

    @property
    def vfov(self) -> float:
        return self.camera.vfov

    @property
    def n_iters(self) -> int:
        return self.trace.n_iters

    def reliable(self, max_sigma_deg: float) -> bool:
        """True when every gravity and the vfov are known to within max_sigma_deg."""
        limit = math.radians(max_sigma_deg)
        sigmas = [g.sigma_gravity for g in self.gravities] + [self.sigma_vfov]
        return all(s <= limit for s in sigmas)

    def raise_for_status(self) -> None:
        if self.status is LMStatus.STALLED:
            raise OptimizationFailedError(
                f"Optimization stalled after {self.n_iters} iterations "
                f"(damping exceeded its ceiling)"
            )


def _sqrt_nonneg(x: float) -> float:
    return math.sqrt(x) if x > 0 else 0.0


def _summarize(
    objective: CalibrationObjective, state: CalibrationState, sigma: np.ndarray, trace: LMTrace
) -> CalibrationResult:
    camera = objective.camera(state)
    gravities: List[ImageGravity] = []
    for i, g in enumerate(state.gravities):
        if objective.mask.gravity:
            block = sigma[2 * i: 2 * i + 2, 2 * i: 2 * i + 2]
            rp = roll_pitch_jacobian(g) @ tangent_basis(g)
            rp_cov = rp @ block @ rp.T if np.all(np.isfinite(block)) else np.full((2, 2), np.inf)
            gravities.append(ImageGravity(
                gravity=g,
                sigma_gravity=_sqrt_nonneg(float(np.trace(block))),
                sigma_roll=_sqrt_nonneg(float(rp_cov[0, 0])),
                sigma_pitch=_sqrt_nonneg(float(rp_cov[1, 1])),
            ))
        else:
            gravities.append(ImageGravity(gravity=g))

    sigma_log_f = 0.0
    if objective.mask.focal:
        sigma_log_f = _sqrt_nonneg(float(sigma[objective.focal_idx, objective.focal_idx]))
    f, h = camera.f, camera.height
    dvfov_dlogf = abs(-h * f / (f * f + h * h / 4.0))

    k_diag = np.diag(sigma)[objective.k_start: objective.k_start + objective.n_k]
    sigma_k = np.array([_sqrt_nonneg(float(v)) for v in k_diag])
    if sigma_k.size < objective.n_dist:
        sigma_k = np.zeros(objective.n_dist)

    return CalibrationResult(
        camera=camera,
        gravities=gravities,
        sigma_focal=f * sigma_log_f,
        sigma_log_focal=sigma_log_f,
        sigma_vfov=dvfov_dlogf * sigma_log_f,
        sigma_k=sigma_k,
        covariance=sigma,
        parameter_names=objective.names(),
        trace=trace,
    )


def initial_state(problem: CalibrationProblem) -> CalibrationState:
    """
    Starting point: the init strategy per image, then priors, then fixed values.

    Shared intrinsics start from the median of the per-image focal estimates.
    """
    inits = [run_initializer(problem.init, fld, problem.ransac) for fld in problem.fields]
    gravities = [g for g, _ in inits]
    focal = float(np.median([f for _, f in inits]))
    k = np.zeros(problem.model.num_distortion)

    if problem.initial_gravity is not None:
        gravities = [problem.initial_gravity] * problem.n_images
    if problem.initial_focal is not None:
        focal = float(problem.initial_focal)

    if problem.prior_gravity is not None:
        g0 = problem.prior_gravity.value
        gravities = [g0 if isinstance(g0, GravityDir) else GravityDir(np.asarray(g0))] * problem.n_images
    if problem.prior_focal is not None:
        focal = float(problem.prior_focal.value)
    if problem.prior_distortion is not None:
        k = np.atleast_1d(np.asarray(problem.prior_distortion.value, dtype=float)).copy()

    if problem.fix_gravity is not None:
        gravities = [problem.fix_gravity]
    if problem.fix_focal is not None:
        focal = float(problem.fix_focal)
    if problem.fix_distortion is not None:
        k = np.atleast_1d(np.asarray(problem.fix_distortion, dtype=float)).copy()
    return CalibrationState(gravities=gravities, focal=focal, k=k)


def calibrate(problem: CalibrationProblem, method: str = "analytic") -> CalibrationResult:
    """
    Initialize, optimize and summarize a calibration problem.

    Raises:
        EmptyProblemError, ProblemLayoutError, NotImplementedError: Invalid layout
        DegenerateHeuristicError, NoHypothesisError, InsufficientSamplesError:
            From the initialization strategy
    """
    problem.validate()
    for fld in problem.fields:
        fld.check_camera(problem.base_camera(1.0))
    objective = CalibrationObjective(problem, method=method)
    state0 = initial_state(problem)
    logger.debug(
        "calibrating %d image(s): %d free parameters (%s)",
        problem.n_images, objective.n_params, ", ".join(objective.names()),
    )
    if objective.n_params == 0:
        lin = objective.linearize(state0)
        trace = LMTrace(initial_cost=lin.cost, status=LMStatus.STEP_TOL)
        return _summarize(objective, state0, np.zeros((0, 0)), trace)
    result = optimize(objective, state0, problem.lm)
    return _summarize(objective, result.state, result.covariance, result.trace)
