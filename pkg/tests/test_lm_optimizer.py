import numpy as np
import pytest
from pydantic import ValidationError

from persfit.core.exceptions import InvalidConfigError, SingularSystemError
from persfit.optim.lm_optimizer import (
    CovarianceScaling,
    Linearization,
    LMConfig,
    LMStatus,
    covariance,
    damped_solve,
    lm_step,
    optimize,
)


class ExponentialFit:
    """y = a exp(b t) over a Euclidean state (a, b)."""

    def __init__(self, t, y):
        self.t = np.asarray(t, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.linearizations = 0

    def _residual(self, x):
        return x[0] * np.exp(x[1] * self.t) - self.y

    def linearize(self, x):
        self.linearizations += 1
        r = self._residual(x)
        e = np.exp(x[1] * self.t)
        J = np.stack([e, x[0] * self.t * e], axis=1)
        return Linearization(H=J.T @ J, b=J.T @ r, cost=float(r @ r), n_obs=r.size)

    def evaluate(self, x):
        r = self._residual(x)
        return float(r @ r), 0

    def retract(self, x, delta):
        return x + delta


class Flat:
    """A problem whose Hessian is identically zero."""

    def linearize(self, x):
        return Linearization(H=np.zeros((2, 2)), b=np.zeros(2), cost=1.0, n_obs=4)

    def evaluate(self, x):
        return 1.0, 0

    def retract(self, x, delta):
        return x + delta


class Invalidating(ExponentialFit):
    """Reports invalid residuals at every state except the start."""

    def __init__(self, t, y, start, invalid_elsewhere):
        super().__init__(t, y)
        self.start = np.asarray(start, dtype=float)
        self.invalid_elsewhere = invalid_elsewhere

    def _n_invalid(self, x):
        return 0 if np.array_equal(x, self.start) else self.invalid_elsewhere

    def linearize(self, x):
        lin = super().linearize(x)
        lin.n_invalid = self._n_invalid(x)
        return lin

    def evaluate(self, x):
        return super().evaluate(x)[0], self._n_invalid(x)


@pytest.fixture
def curve():
    t = np.linspace(0.0, 2.0, 25)
    return ExponentialFit(t, 2.0 * np.exp(-0.5 * t))


class TestConfig:
    def test_defaults(self):
        cfg = LMConfig()
        assert (cfg.lambda0, cfg.max_iters, cfg.step_tol) == (0.1, 30, 1e-8)
        assert (cfg.lambda_up, cfg.lambda_down) == (10.0, 0.1)
        assert (cfg.lambda_min, cfg.lambda_max) == (1e-7, 1e7)
        assert cfg.covariance_scaling is CovarianceScaling.RESIDUAL

    @pytest.mark.parametrize(
        "kwargs",
        [{"lambda_up": 0.5}, {"lambda_down": 2.0}, {"lambda_min": 1e8}, {"lambda0": -1.0}, {"max_iters": 0}],
    )
    def test_invalid_schedules(self, kwargs):
        with pytest.raises(InvalidConfigError):
            LMConfig.build(**kwargs)

    def test_build_ignores_unset_values(self):
        assert LMConfig.build(max_iters=None, lambda0=1.0) == LMConfig(lambda0=1.0)

    def test_frozen(self):
        with pytest.raises(ValidationError):
            LMConfig().max_iters = 5


class TestDampedSolve:
    def test_undamped_is_gauss_newton(self):
        H = np.array([[4.0, 1.0], [1.0, 3.0]])
        b = np.array([1.0, 2.0])
        np.testing.assert_allclose(damped_solve(H, b, 0.0), np.linalg.solve(H, -b))

    def test_damping_scales_the_diagonal(self):
        H = np.diag([2.0, 8.0])
        b = np.array([2.0, 8.0])
        np.testing.assert_allclose(damped_solve(H, b, 1.0), [-0.5, -0.5])

    def test_lm_step_builds_normal_equations(self, rng):
        J = rng.normal(size=(20, 3))
        r = rng.normal(size=20)
        w = rng.uniform(0.5, 1.0, size=20)
        H = J.T @ (J * w[:, None])
        b = (J * w[:, None]).T @ r
        np.testing.assert_allclose(lm_step(r, w, J, 0.3), damped_solve(H, b, 0.3))

    def test_no_information(self):
        with pytest.raises(SingularSystemError):
            damped_solve(np.zeros((2, 2)), np.ones(2), 1.0)

    def test_indefinite(self):
        with pytest.raises(SingularSystemError):
            damped_solve(np.array([[1.0, 3.0], [3.0, 1.0]]), np.ones(2), 0.0)


class TestOptimize:
    def test_converges(self, curve):
        result = optimize(curve, np.array([1.0, 0.0]))
        assert result.trace.status is LMStatus.STEP_TOL
        np.testing.assert_allclose(result.state, [2.0, -0.5], atol=1e-7)
        assert result.trace.final_cost < 1e-12

    def test_accepted_costs_decrease(self, curve):
        trace = optimize(curve, np.array([0.5, 1.0])).trace
        costs = [trace.initial_cost] + trace.accepted_costs
        assert all(b < a for a, b in zip(costs, costs[1:]))

    def test_rejected_steps_do_not_relinearize(self, curve):
        result = optimize(curve, np.array([0.5, 1.0]), LMConfig(lambda0=1e-6))
        accepted = sum(it.accepted for it in result.trace.iterations)
        assert curve.linearizations == accepted + 1

    def test_iteration_cap(self, curve):
        result = optimize(curve, np.array([0.5, 1.0]), LMConfig(max_iters=2))
        assert result.trace.status is LMStatus.MAX_ITERS
        assert result.trace.n_iters == 2

    def test_stalls_without_information(self):
        result = optimize(Flat(), np.zeros(2))
        assert result.trace.status is LMStatus.STALLED
        assert result.trace.n_iters == 9
        np.testing.assert_array_equal(result.state, np.zeros(2))

    def test_steps_that_add_invalid_residuals_are_rejected(self):
        t = np.linspace(0.0, 2.0, 25)
        start = np.array([1.0, 0.0])
        problem = Invalidating(t, 2.0 * np.exp(-0.5 * t), start, invalid_elsewhere=3)

        result = optimize(problem, start.copy(), LMConfig(lambda_max=1e4))

        assert result.trace.status is LMStatus.STALLED
        assert not any(it.accepted for it in result.trace.iterations)
        np.testing.assert_array_equal(result.state, start)

    def test_starting_at_the_optimum(self, curve):
        result = optimize(curve, np.array([2.0, -0.5]))
        assert result.trace.status is LMStatus.STEP_TOL
        assert result.trace.n_iters == 1


class TestCovariance:
    def test_unscaled_is_inverse(self):
        H = np.array([[4.0, 1.0], [1.0, 3.0]])
        np.testing.assert_allclose(covariance(H, 5.0, 10, CovarianceScaling.NONE), np.linalg.inv(H))

    def test_residual_scaling(self):
        H = np.diag([2.0, 4.0])
        np.testing.assert_allclose(covariance(H, 8.0, 6), np.diag([1.0, 0.5]))

    def test_null_directions_are_dropped(self):
        H = np.diag([2.0, 0.0])
        np.testing.assert_allclose(
            covariance(H, 1.0, 3, CovarianceScaling.NONE), np.diag([0.5, 0.0])
        )

    def test_empty(self):
        assert covariance(np.zeros((0, 0)), 0.0, 0).shape == (0, 0)
