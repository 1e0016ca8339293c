"""
Levenberg-Marquardt on a manifold-valued state.

The optimizer only sees a problem through three calls: ``linearize`` (normal
equations at a state), ``evaluate`` (cost at a candidate state) and
``retract`` (apply a local update). The damped system

    (H + lambda diag(H)) delta = -b,   H = J^T W J,  b = J^T W r

is solved by Cholesky factorization. A step is accepted when the cost
decreases and no more residuals turn invalid than at the current state; the
damping then shrinks, otherwise it grows and the step is retried from the
same linearization.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, List, Optional, Protocol, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import linalg

from ..core.exceptions import InvalidConfigError, SingularSystemError
from ..core.logging import get_logger

logger = get_logger(__name__)

DIAG_FLOOR = 1e-12
EIGEN_CLAMP = 1e-12


class CovarianceScaling(str, Enum):
    """How the inverse Hessian is scaled into a covariance."""
    RESIDUAL = "residual"
    NONE = "none"


class LMConfig(BaseModel):
    """Damping schedule and stopping rule."""

    model_config = ConfigDict(frozen=True)

    lambda0: float = Field(default=0.1, gt=0, description="Initial damping")
    max_iters: int = Field(default=30, gt=0, description="Iteration cap")
    step_tol: float = Field(default=1e-8, gt=0, description="Stop when |delta| falls below")
    lambda_up: float = Field(default=10.0, gt=0, description="Damping factor on rejection")
    lambda_down: float = Field(default=0.1, gt=0, description="Damping factor on acceptance")
    lambda_min: float = Field(default=1e-7, gt=0)
    lambda_max: float = Field(default=1e7, gt=0)
    covariance_scaling: CovarianceScaling = CovarianceScaling.RESIDUAL

    @model_validator(mode="after")
    def check_schedule(self) -> "LMConfig":
        if not (self.lambda_down < 1.0 < self.lambda_up):
            raise ValueError("Damping factors must satisfy lambda_down < 1 < lambda_up")
        if not (self.lambda_min < self.lambda_max):
            raise ValueError("lambda_min must be below lambda_max")
        return self

    @classmethod
    def build(cls, **kwargs) -> "LMConfig":
        """Construct from keyword arguments, mapping validation errors to InvalidConfigError."""
        try:
            return cls(**{k: v for k, v in kwargs.items() if v is not None})
        except ValueError as exc:
            raise InvalidConfigError(str(exc)) from exc


class LMStatus(str, Enum):
    STEP_TOL = "step_tol"
    MAX_ITERS = "max_iters"
    STALLED = "stalled_damping"


@dataclass
class LMIteration:
    cost: float
    lam: float
    step_norm: float
    accepted: bool


@dataclass
class LMTrace:
    """Per-iteration record of one optimization run."""
    initial_cost: float
    iterations: List[LMIteration] = field(default_factory=list)
    status: LMStatus = LMStatus.MAX_ITERS

    @property
    def n_iters(self) -> int:
        return len(self.iterations)

    @property
    def final_cost(self) -> float:
        costs = self.accepted_costs
        return costs[-1] if costs else self.initial_cost

    @property
    def accepted_costs(self) -> List[float]:
        return [it.cost for it in self.iterations if it.accepted]


@dataclass
class Linearization:
    """Normal equations of a problem at one state."""
    H: np.ndarray
    b: np.ndarray
    cost: float
    n_obs: int
    n_invalid: int = 0


class LeastSquaresProblem(Protocol):
    def linearize(self, state: Any) -> Linearization: ...

    def evaluate(self, state: Any) -> Tuple[float, int]: ...

    def retract(self, state: Any, delta: np.ndarray) -> Any: ...


@dataclass
class LMResult:
    state: Any
    covariance: np.ndarray
    trace: LMTrace
    linearization: Linearization


def damped_solve(H: np.ndarray, b: np.ndarray, lam: float) -> np.ndarray:
    """
    Solve (H + lam diag(H)) delta = -b.

    Raises:
        SingularSystemError: H carries no information, or the damped system
            is not positive definite
    """
    diag = np.diag(H)
    if diag.size == 0 or not np.max(diag) > 0.0:
        raise SingularSystemError("Normal equations carry no information (diag(H) <= 0)")
    damped = H + lam * np.diag(np.maximum(diag, DIAG_FLOOR))
    try:
        factor = linalg.cho_factor(damped, lower=False, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError(f"Damped system is not positive definite: {exc}") from exc
    return -linalg.cho_solve(factor, b)


def lm_step(r: np.ndarray, w: np.ndarray, J: np.ndarray, lam: float) -> np.ndarray:
    """One damped step from stacked residuals, weights and Jacobian."""
    wj = J * w[:, None]
    return damped_solve(J.T @ wj, wj.T @ r, lam)


def covariance(
    H: np.ndarray,
    cost: float,
    n_obs: int,
    scaling: CovarianceScaling = CovarianceScaling.RESIDUAL,
) -> np.ndarray:
    """
    Covariance of the local parameters at a solution.

    Eigenvalues of H below 1e-12 of the largest are dropped from the
    pseudo-inverse. With residual scaling the result is multiplied by the
    residual variance cost / (n_obs - P).
    """
    n = H.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    sym = 0.5 * (H + H.T)
    evals, evecs = np.linalg.eigh(sym)
    top = float(evals.max())
    if not top > 0.0:
        logger.warning("Hessian has no positive eigenvalue; covariance is unbounded")
        return np.diag(np.full(n, np.inf))
    keep = evals > EIGEN_CLAMP * top
    if not keep.all():
        logger.warning("Clamped %d near-null Hessian eigenvalue(s)", int((~keep).sum()))
    inv = np.where(keep, 1.0 / np.where(keep, evals, 1.0), 0.0)
    sigma = (evecs * inv) @ evecs.T
    sigma = 0.5 * (sigma + sigma.T)

    if scaling is CovarianceScaling.RESIDUAL:
        dof = n_obs - n
        if dof > 0:
            sigma *= cost / dof
        else:
            logger.warning("No residual degrees of freedom (%d obs, %d params)", n_obs, n)
    return sigma


def optimize(
    problem: LeastSquaresProblem,
    state: Any,
    cfg: Optional[LMConfig] = None,
) -> LMResult:
    """
    Run Levenberg-Marquardt from an initial state.

    A step is accepted only if its cost is finite and lower than the current
    cost, and its count of invalid residuals (pixels that fall outside the
    invertible distortion domain) does not increase.

    Each trial step (accepted or not) counts as one iteration. A rejected
    step raises the damping and is retried without relinearizing; once the
    damping passes lambda_max the run stops with status StalledDamping.
    """
    cfg = cfg or LMConfig()
    lin = problem.linearize(state)
    trace = LMTrace(initial_cost=lin.cost)
    lam = cfg.lambda0

    while trace.n_iters < cfg.max_iters:
        try:
            delta = damped_solve(lin.H, lin.b, lam)
        except SingularSystemError as exc:
            logger.debug("singular system at lambda=%.3g: %s", lam, exc.detail)
            trace.iterations.append(LMIteration(lin.cost, lam, float("nan"), False))
            lam *= cfg.lambda_up
            if lam > cfg.lambda_max:
                trace.status = LMStatus.STALLED
                break
            continue

        step_norm = float(np.linalg.norm(delta))
        if step_norm < cfg.step_tol:
            trace.iterations.append(LMIteration(lin.cost, lam, step_norm, False))
            trace.status = LMStatus.STEP_TOL
            break

        candidate = problem.retract(state, delta)
        cost, n_invalid = problem.evaluate(candidate)
        accepted = bool(np.isfinite(cost) and cost < lin.cost and n_invalid <= lin.n_invalid)
        trace.iterations.append(LMIteration(cost, lam, step_norm, accepted))
        logger.debug(
            "iter %d: cost=%.6g lambda=%.3g |delta|=%.3g accepted=%s",
            trace.n_iters, cost, lam, step_norm, accepted,
        )

        if accepted:
            state = candidate
            lin = problem.linearize(state)
            lam = max(lam * cfg.lambda_down, cfg.lambda_min)
        else:
            lam *= cfg.lambda_up
            if lam > cfg.lambda_max:
                trace.status = LMStatus.STALLED
                break

    logger.info(
        "LM finished: status=%s iters=%d cost=%.6g",
        trace.status.value, trace.n_iters, lin.cost,
    )
    sigma = covariance(lin.H, lin.cost, lin.n_obs, cfg.covariance_scaling)
    return LMResult(state=state, covariance=sigma, trace=trace, linearization=lin)
