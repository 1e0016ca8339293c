import math

import numpy as np
import pytest

from persfit.core.exceptions import (
    DegeneratePixelError,
    DimensionMismatchError,
    InvariantViolationError,
    NonInvertibleError,
)
from persfit.geometry.camera_model import (
    CameraModel,
    CameraParams,
    denormalize,
    distort,
    focal_from_vfov,
    frame_radius,
    invertible_radius,
    normalize,
    undistort,
)
from persfit.geometry.gravity_manifold import GravityDir, from_roll_pitch
from persfit.geometry.perspective_field import (
    PerspectiveField,
    evaluate_field,
    latitude_at,
    pixel_centers,
    render_field,
    sample_field,
    up_vector_at,
)


def test_pixel_centers_stride():
    points, index = pixel_centers(5, 4, stride=2)
    assert points.shape == (6, 2)
    np.testing.assert_array_equal(points[0], [0.5, 0.5])
    np.testing.assert_array_equal(points[2], [4.5, 0.5])
    np.testing.assert_array_equal(index[3], [2, 0])


class TestForwardModel:
    def test_upright_pinhole_points_up_everywhere(self, pinhole, upright):
        field = render_field(pinhole, upright)
        np.testing.assert_allclose(field.up[..., 0], 0.0, atol=1e-15)
        np.testing.assert_allclose(field.up[..., 1], -1.0)

    def test_latitude_is_positive_below_the_horizon(self, pinhole, upright):
        assert latitude_at(pinhole, upright, (32.0, 24.0)) == 0.0
        assert latitude_at(pinhole, upright, (32.0, 24.0 + 50.0)) == pytest.approx(math.pi / 4)
        assert latitude_at(pinhole, upright, (32.0, 0.0)) < 0.0

    def test_pinhole_up_is_projected_gravity(self, pinhole, tilted):
        p = np.array([10.0, 40.0])
        q = (p - pinhole.c) / pinhole.f
        expected = q * tilted.z - tilted.vec[:2]
        np.testing.assert_allclose(up_vector_at(pinhole, tilted, p), expected / np.linalg.norm(expected))

    @pytest.mark.parametrize("camera", ["pinhole", "radial2"])
    def test_vanishing_point_is_degenerate(self, camera, request):
        params = request.getfixturevalue(camera)
        g = from_roll_pitch(0.0, math.radians(30.0))
        q0 = g.vec[:2] / g.z
        p = params.c + params.f * distort(params, q0[None])[0]
        with pytest.raises(DegeneratePixelError):
            up_vector_at(params, g, p)
        assert math.isfinite(latitude_at(params, g, p))

    def test_distortion_bends_up_vectors(self, radial1, upright):
        up = up_vector_at(radial1, upright, (0.5, 0.5))
        assert abs(up[0]) > 1e-3
        assert np.linalg.norm(up) == pytest.approx(1.0)

    def test_render_matches_pointwise_evaluation(self, radial2, tilted):
        field = render_field(radial2, tilted)
        for row, col in [(0, 0), (5, 40), (47, 63), (24, 32)]:
            p = (col + 0.5, row + 0.5)
            np.testing.assert_allclose(field.up[row, col], up_vector_at(radial2, tilted, p), atol=1e-14)
            assert field.latitude[row, col] == pytest.approx(latitude_at(radial2, tilted, p), abs=1e-14)

    def test_rendered_field_satisfies_invariants(self, radial2, tilted):
        field = render_field(radial2, tilted)
        field.check_invariants()
        assert field.size == (64, 48)
        assert np.all(field.conf_up == 1.0)

    def test_pixels_beyond_invertible_radius_are_masked(self, upright):
        cam = CameraParams.from_size(64, 48, 20.0, CameraModel.RADIAL1, k1=-0.3)
        field = render_field(cam, upright)
        assert field.conf_up[0, 0] == 0.0 and field.conf_lat[0, 0] == 0.0
        assert field.conf_lat[24, 32] == 1.0
        with pytest.raises(NonInvertibleError):
            latitude_at(cam, upright, (0.5, 0.5))
        with pytest.raises(NonInvertibleError):
            up_vector_at(cam, upright, (0.5, 0.5))

    def test_evaluate_flags_invalid_rays(self, upright):
        cam = CameraParams.from_size(64, 48, 20.0, CameraModel.RADIAL1, k1=-0.3)
        sample = evaluate_field(cam, upright, [[0.5, 0.5], [32.0, 24.0]])
        np.testing.assert_array_equal(sample.ray_valid, [False, True])
        np.testing.assert_array_equal(sample.up[0], [0.0, -1.0])


class TestPerspectiveField:
    def test_default_confidences_are_one(self):
        field = PerspectiveField(np.tile([0.0, -1.0], (3, 4, 1)), np.zeros((3, 4)))
        assert field.conf_up.shape == (3, 4)
        assert np.all(field.conf_lat == 1.0)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            PerspectiveField(np.zeros((3, 4, 2)), np.zeros((4, 3)))
        with pytest.raises(DimensionMismatchError):
            PerspectiveField(np.zeros((3, 4, 2)), np.zeros((3, 4)), conf_up=np.ones((3, 3)))

    def test_invariant_violation_names_the_pixel(self, pinhole, upright):
        field = render_field(pinhole, upright)
        field.up[2, 5] = [0.0, -2.0]
        with pytest.raises(InvariantViolationError) as info:
            field.check_invariants()
        assert (info.value.row, info.value.col) == (2, 5)

    def test_confidence_out_of_range(self, pinhole, upright):
        field = render_field(pinhole, upright)
        field.conf_lat[1, 1] = 1.5
        with pytest.raises(InvariantViolationError):
            field.check_invariants()

    def test_camera_size_check(self, pinhole, upright):
        field = render_field(pinhole, upright)
        field.check_camera(pinhole)
        with pytest.raises(DimensionMismatchError):
            field.check_camera(CameraParams.from_size(48, 64, 50.0))

    def test_copy_is_independent(self, pinhole, upright):
        field = render_field(pinhole, upright)
        dup = field.copy()
        dup.latitude[0, 0] = 1.0
        assert field.latitude[0, 0] != 1.0


class TestSampling:
    def test_pixel_centers_hit_grid_nodes(self, radial2, tilted):
        field = render_field(radial2, tilted)
        up, lat = sample_field(field, [0.5, 10.5, 63.5], [0.5, 20.5, 47.5])
        np.testing.assert_allclose(up, field.up[[0, 20, 47], [0, 10, 63]], atol=1e-12)
        np.testing.assert_allclose(lat, field.latitude[[0, 20, 47], [0, 10, 63]], atol=1e-15)

    def test_bilinear_between_centers(self, pinhole, tilted):
        field = render_field(pinhole, tilted)
        _, lat = sample_field(field, 11.0, 20.5)
        expected = 0.5 * (field.latitude[20, 10] + field.latitude[20, 11])
        assert lat[0] == pytest.approx(expected, abs=1e-12)

    def test_clamps_outside_the_grid(self, pinhole, tilted):
        field = render_field(pinhole, tilted)
        _, lat = sample_field(field, -3.0, -3.0)
        assert lat[0] == pytest.approx(field.latitude[0, 0])


def angle_between_fields(a, b):
    cross = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return np.abs(np.arctan2(cross, np.sum(a * b, axis=-1)))


def finite_difference_up(params, g, points, t=1e-6):
    """Direction in which a pixel moves when its ray steps against gravity."""
    q, _ = undistort(params, normalize(params, points), strict=False)
    moved = (q - t * g.vec[:2]) / (1.0 - t * g.vec[2])
    delta = denormalize(params, distort(params, moved)) - denormalize(params, distort(params, q))
    return delta / np.linalg.norm(delta, axis=-1, keepdims=True)


def quarter_turn(up, lat, mask):
    """The field seen after rolling a centered square camera by 90 degrees."""
    rows, cols = np.indices(lat.shape)
    size = lat.shape[1]
    turned_up, turned_lat, turned_mask = np.empty_like(up), np.empty_like(lat), np.empty_like(mask)
    turned_up[cols, size - 1 - rows] = np.stack([-up[..., 1], up[..., 0]], axis=-1)
    turned_lat[cols, size - 1 - rows] = lat
    turned_mask[cols, size - 1 - rows] = mask
    return turned_up, turned_lat, turned_mask


def quarter_turn_gravity(g):
    gx, gy, gz = g.vec
    return GravityDir(np.array([-gy, gx, gz]))


@pytest.mark.parametrize("model", [CameraModel.PINHOLE, CameraModel.RADIAL1])
class TestFieldProperties:
    def test_up_vectors_match_the_finite_difference_limit(self, model, rng):
        checked = 0
        for _ in range(20):
            f = focal_from_vfov(math.radians(rng.uniform(20.0, 105.0)), 48)
            kwargs = {"k1": rng.uniform(-0.3, 0.3)} if model is CameraModel.RADIAL1 else {}
            params = CameraParams.from_size(64, 48, f, model, **kwargs)
            if frame_radius(params) >= 0.8 * invertible_radius(params):
                continue
            g = from_roll_pitch(*rng.uniform(-math.pi / 4, math.pi / 4, size=2))
            points, _ = pixel_centers(params.width, params.height)

            sample = evaluate_field(params, g, points)
            err = angle_between_fields(sample.up, finite_difference_up(params, g, points))[sample.valid]

            assert err.size > 0.99 * len(points)
            assert np.mean(err < 1e-5) >= 0.999
            checked += 1
        assert checked >= 3

    def test_roll_equivariance_at_quarter_turns(self, model, tilted):
        kwargs = {"k1": -0.08} if model is CameraModel.RADIAL1 else {}
        params = CameraParams.from_size(48, 48, 40.0, model, **kwargs)
        field = render_field(params, tilted)
        up, lat, mask = field.up, field.latitude, field.conf_up > 0
        g = tilted
        for _ in range(3):
            up, lat, mask = quarter_turn(up, lat, mask)
            g = quarter_turn_gravity(g)
            turned = render_field(params, g)
            np.testing.assert_array_equal(turned.conf_up > 0, mask)
            np.testing.assert_allclose(turned.up[mask], up[mask], rtol=0, atol=1e-9)
            np.testing.assert_allclose(turned.latitude, lat, rtol=0, atol=1e-9)

    def test_latitude_sign_follows_the_horizon(self, model, tilted):
        kwargs = {"k1": -0.08} if model is CameraModel.RADIAL1 else {}
        params = CameraParams.from_size(64, 48, 50.0, model, **kwargs)
        field = render_field(params, tilted)
        points, _ = pixel_centers(params.width, params.height)
        q, valid = undistort(params, normalize(params, points), strict=False)
        side = (q @ tilted.vec[:2] + tilted.vec[2]).reshape(field.latitude.shape)

        clear = valid.reshape(side.shape) & (np.abs(side) > 1e-12)
        np.testing.assert_array_equal(np.sign(field.latitude[clear]), np.sign(side[clear]))
        assert np.any(side[clear] > 0) and np.any(side[clear] < 0)
