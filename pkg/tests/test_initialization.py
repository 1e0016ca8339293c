import math

import numpy as np
import pytest

from persfit.core.exceptions import (
    DegenerateHeuristicError,
    InsufficientSamplesError,
    InvalidConfigError,
)
from persfit.geometry.camera_model import CameraParams
from persfit.geometry.gravity_manifold import GravityDir, from_roll_pitch
from persfit.geometry.perspective_field import PerspectiveField, render_field
from persfit.optim.initialization import (
    INIT_REGISTRY,
    InitStrategy,
    RansacConfig,
    available_init_strategies,
    get_init_strategy,
    init_heuristic,
    init_trivial,
    ransac_solve,
    register_init_strategy,
    run_initializer,
)


def flat_field(width=40, height=30):
    return PerspectiveField(np.tile([0.0, -1.0], (height, width, 1)), np.zeros((height, width)))


def test_trivial():
    g, f = init_trivial(640, 480)
    np.testing.assert_array_equal(g.vec, [0.0, 1.0, 0.0])
    assert f == pytest.approx(448.0)


class TestHeuristic:
    def test_exact_for_zero_roll_pinhole(self):
        cam = CameraParams.from_size(65, 49, 40.0)
        g_true = from_roll_pitch(0.0, math.radians(15.0))
        g, f = init_heuristic(render_field(cam, g_true))
        assert f == pytest.approx(40.0, rel=1e-9)
        assert g.angle_to(g_true) < 1e-9

    def test_close_with_roll(self, pinhole, tilted):
        g, f = init_heuristic(render_field(pinhole, tilted))
        assert math.degrees(g.angle_to(tilted)) < 2.0
        assert f == pytest.approx(pinhole.f, rel=0.1)

    def test_flat_latitude_is_degenerate(self):
        with pytest.raises(DegenerateHeuristicError):
            init_heuristic(flat_field())

    def test_falls_back_to_trivial(self):
        g, f = run_initializer("heuristic", flat_field())
        assert (g.vec.tolist(), f) == ([0.0, 1.0, 0.0], 0.7 * 40)


class TestSolver:
    def test_recovers_noiseless_pinhole(self, pinhole, tilted):
        result = ransac_solve(render_field(pinhole, tilted), RansacConfig(iterations=30))
        assert math.degrees(result.gravity.angle_to(tilted)) < 1e-3
        assert result.focal == pytest.approx(pinhole.f, rel=1e-4)
        assert result.inlier_up.all() and result.inlier_lat.all()
        assert result.n_hypotheses >= 1

    def test_is_reproducible(self, pinhole, tilted):
        field = render_field(pinhole, tilted)
        a = ransac_solve(field, RansacConfig(iterations=10, seed=3))
        b = ransac_solve(field, RansacConfig(iterations=10, seed=3))
        np.testing.assert_array_equal(a.gravity.vec, b.gravity.vec)
        assert a.focal == b.focal

    def test_ignores_outliers(self, pinhole, tilted, rng):
        field = render_field(pinhole, tilted)
        bad = rng.random(field.latitude.shape) < 0.2
        angles = rng.uniform(-math.pi, math.pi, size=int(bad.sum()))
        field.up[bad] = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
        field.latitude[bad] = rng.uniform(-1.5, 1.5, size=int(bad.sum()))
        result = ransac_solve(field, RansacConfig(iterations=100))
        assert math.degrees(result.gravity.angle_to(tilted)) < 0.5
        assert result.focal == pytest.approx(pinhole.f, rel=0.02)
        assert not result.inlier_lat[bad].all()

    def test_needs_confident_pixels(self, pinhole, tilted):
        field = render_field(pinhole, tilted)
        field.conf_up[:] = 0.0
        with pytest.raises(InsufficientSamplesError):
            ransac_solve(field)


class TestRegistry:
    def test_builtin_strategies(self):
        assert {"trivial", "heuristic", "solver"} <= set(available_init_strategies())
        assert get_init_strategy("heuristic").fallback == "trivial"

    def test_unknown_strategy(self):
        with pytest.raises(InvalidConfigError, match="Available"):
            get_init_strategy("oracle")

    def test_register_custom_strategy(self, pinhole, tilted):
        strategy = InitStrategy(
            name="known",
            description="Ground truth",
            initializer=lambda fld, cfg: (tilted, pinhole.f),
        )
        register_init_strategy(strategy)
        try:
            g, f = run_initializer("known", render_field(pinhole, tilted))
            assert g is tilted and f == pinhole.f
        finally:
            INIT_REGISTRY.pop("known")

    @pytest.mark.parametrize(
        "strategy",
        [
            InitStrategy(name="", description="x", initializer=init_trivial),
            InitStrategy(name="bad name", description="x", initializer=init_trivial),
            InitStrategy(name="nodesc", description="", initializer=init_trivial),
            InitStrategy(name="nocall", description="x", initializer=None),
            InitStrategy(name="loop", description="x", initializer=init_trivial, fallback="loop"),
        ],
    )
    def test_invalid_strategies(self, strategy):
        with pytest.raises(InvalidConfigError):
            register_init_strategy(strategy)
        assert strategy.name not in INIT_REGISTRY or strategy.name == ""
