import math

import numpy as np
import pytest

from persfit.core.exceptions import DomainError, GimbalLockError
from persfit.geometry.gravity_manifold import (
    GravityDir,
    angle_between,
    from_roll_pitch,
    retract,
    roll_pitch,
    roll_pitch_jacobian,
    tangent_basis,
)


def random_gravities(rng, n):
    return [GravityDir(v) for v in rng.normal(size=(n, 3))]


def test_upright_convention():
    g = from_roll_pitch(0.0, 0.0)
    np.testing.assert_allclose(g.vec, [0.0, 1.0, 0.0], atol=1e-15)
    assert g.roll_pitch() == (0.0, 0.0)


def test_positive_pitch_points_gravity_forward():
    g = from_roll_pitch(0.0, math.radians(30.0))
    assert g.z == pytest.approx(0.5)


def test_is_normalized():
    g = GravityDir([0.0, 3.0, 4.0])
    np.testing.assert_allclose(g.vec, [0.0, 0.6, 0.8])


@pytest.mark.parametrize("vec", [[0.0, 0.0, 0.0], [1.0, 2.0], [np.nan, 1.0, 0.0]])
def test_rejects_invalid_vectors(vec):
    with pytest.raises(DomainError):
        GravityDir(vec)


def test_roll_pitch_round_trip(rng):
    for roll, pitch in rng.uniform(-1.4, 1.4, size=(50, 2)):
        r, p = roll_pitch(from_roll_pitch(roll, pitch))
        assert r == pytest.approx(roll, abs=1e-12)
        assert p == pytest.approx(pitch, abs=1e-12)


def test_pole_reports_zero_roll():
    g = GravityDir([0.0, 0.0, -1.0])
    assert g.roll_pitch() == (0.0, pytest.approx(-math.pi / 2))
    with pytest.raises(GimbalLockError):
        g.roll_pitch(strict=True)


def test_tangent_basis_is_orthonormal(rng):
    for g in random_gravities(rng, 30) + [GravityDir.upright()]:
        B = tangent_basis(g)
        np.testing.assert_allclose(B.T @ B, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(g.vec @ B, 0.0, atol=1e-12)
        np.testing.assert_allclose(np.cross(B[:, 0], B[:, 1]), g.vec, atol=1e-12)


def test_retract_zero_is_identity(tilted):
    np.testing.assert_allclose(retract(tilted, [0.0, 0.0]).vec, tilted.vec, atol=1e-15)


def test_retract_moves_by_step_length(rng):
    for g in random_gravities(rng, 30):
        delta = rng.normal(scale=0.5, size=2)
        moved = g.retract(delta)
        assert np.linalg.norm(moved.vec) == pytest.approx(1.0)
        assert g.angle_to(moved) == pytest.approx(np.linalg.norm(delta), abs=1e-12)


def test_angle_between_is_stable():
    a = np.array([0.0, 1.0, 0.0])
    assert angle_between(a, a) == 0.0
    assert angle_between(a, -a) == pytest.approx(math.pi)
    b = np.array([1e-9, 1.0, 0.0])
    assert angle_between(a, b) == pytest.approx(1e-9, rel=1e-6)


def test_roll_pitch_jacobian_matches_finite_differences(rng):
    h = 1e-6
    for roll, pitch in rng.uniform(-1.2, 1.2, size=(20, 2)):
        g = from_roll_pitch(roll, pitch)
        analytic = roll_pitch_jacobian(g) @ tangent_basis(g)
        numeric = np.zeros((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            plus = np.array(roll_pitch(retract(g, e)))
            minus = np.array(roll_pitch(retract(g, -e)))
            numeric[:, j] = (plus - minus) / (2 * h)
        np.testing.assert_allclose(analytic, numeric, atol=1e-7)


def test_roll_pitch_jacobian_at_pole():
    jac = roll_pitch_jacobian(GravityDir([0.0, 0.0, 1.0]))
    np.testing.assert_array_equal(jac, np.zeros((2, 3)))
