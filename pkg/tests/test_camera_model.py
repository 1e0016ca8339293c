import math

import numpy as np
import pytest

from persfit.core.exceptions import DomainError, InvalidCameraError, NonInvertibleError
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
    vfov,
    vfov_from_focal,
)
from persfit.geometry.perspective_field import pixel_centers


class TestCameraParams:
    def test_from_size_centers_principal_point(self):
        cam = CameraParams.from_size(320, 240, 300.0)
        assert (cam.cx, cam.cy) == (160.0, 120.0)
        assert cam.size == (320, 240)
        assert cam.model is CameraModel.PINHOLE

    def test_model_string_is_coerced(self):
        cam = CameraParams.from_size(10, 10, 5.0, "radial1", k1=0.1)
        assert cam.model is CameraModel.RADIAL1

    @pytest.mark.parametrize("f", [0.0, -1.0, math.inf, math.nan])
    def test_rejects_bad_focal(self, f):
        with pytest.raises(InvalidCameraError):
            CameraParams.from_size(10, 10, f)

    def test_rejects_empty_image(self):
        with pytest.raises(InvalidCameraError):
            CameraParams.from_size(0, 10, 5.0)

    def test_pinhole_has_no_distortion(self):
        with pytest.raises(InvalidCameraError):
            CameraParams.from_size(10, 10, 5.0, CameraModel.PINHOLE, k1=0.1)

    def test_radial1_has_no_k2(self):
        with pytest.raises(InvalidCameraError):
            CameraParams.from_size(10, 10, 5.0, CameraModel.RADIAL1, k2=0.1)

    def test_free_distortion_vector_follows_model(self, pinhole, radial1, radial2):
        assert pinhole.k.shape == (0,)
        np.testing.assert_array_equal(radial1.k, [-0.08])
        np.testing.assert_array_equal(radial2.k, [-0.1, 0.02])

    def test_with_distortion_pads_with_zero(self, radial2):
        cam = radial2.with_distortion([0.05])
        assert (cam.k1, cam.k2) == (0.05, 0.0)

    def test_num_distortion(self):
        assert [m.num_distortion for m in CameraModel] == [0, 1, 2]


class TestFieldOfView:
    def test_round_trip(self):
        for deg in (5.0, 20.0, 60.0, 105.0, 170.0):
            f = focal_from_vfov(math.radians(deg), 480)
            assert math.degrees(vfov_from_focal(f, 480)) == pytest.approx(deg, abs=1e-10)

    def test_ninety_degrees(self):
        assert focal_from_vfov(math.pi / 2, 200) == pytest.approx(100.0)
        assert vfov(CameraParams.from_size(300, 200, 100.0)) == pytest.approx(math.pi / 2)

    @pytest.mark.parametrize("angle", [0.0, math.pi, -0.1, 4.0])
    def test_out_of_domain(self, angle):
        with pytest.raises(DomainError):
            focal_from_vfov(angle, 100)


class TestDistortion:
    def test_normalize_inverts_denormalize(self, radial2, rng):
        p = rng.uniform(0, 64, size=(20, 2))
        np.testing.assert_allclose(denormalize(radial2, normalize(radial2, p)), p, atol=1e-12)

    def test_pinhole_is_identity(self, pinhole, rng):
        q = rng.normal(size=(10, 2))
        np.testing.assert_array_equal(distort(pinhole, q), q)
        np.testing.assert_array_equal(undistort(pinhole, q), q)

    def test_radial_factor(self, radial2):
        q = np.array([[0.3, 0.4]])
        s = 0.25
        expected = q * (1.0 - 0.1 * s + 0.02 * s * s)
        np.testing.assert_allclose(distort(radial2, q), expected)

    def test_undistort_round_trip_dense_grid(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            cam = CameraParams.from_size(
                320, 240, 200.0, CameraModel.RADIAL2,
                k1=rng.uniform(-0.15, 0.15), k2=rng.uniform(-0.02, 0.02),
            )
            if frame_radius(cam) >= 0.9 * invertible_radius(cam):
                continue
            points, _ = pixel_centers(320, 240, stride=8)
            qd = normalize(cam, points)
            np.testing.assert_allclose(distort(cam, undistort(cam, qd)), qd, atol=1e-10)

    def test_origin_is_fixed(self, radial2):
        np.testing.assert_array_equal(undistort(radial2, np.zeros((1, 2))), np.zeros((1, 2)))

    def test_batch_does_not_change_results(self, radial2, rng):
        qd = rng.uniform(-0.6, 0.6, size=(50, 2))
        batch = undistort(radial2, qd)
        single = np.stack([undistort(radial2, q[None])[0] for q in qd])
        np.testing.assert_array_equal(batch, single)


class TestInvertibleRadius:
    def test_positive_k1_never_folds(self):
        cam = CameraParams.from_size(10, 10, 5.0, CameraModel.RADIAL1, k1=0.2)
        assert invertible_radius(cam) == math.inf

    def test_negative_k1_closed_form(self):
        cam = CameraParams.from_size(10, 10, 5.0, CameraModel.RADIAL1, k1=-0.3)
        s = math.sqrt(1.0 / 0.9)
        assert invertible_radius(cam) == pytest.approx(s * (1.0 - 0.3 * s * s))

    def test_points_beyond_radius_are_rejected(self):
        cam = CameraParams.from_size(10, 10, 5.0, CameraModel.RADIAL1, k1=-0.3)
        r = invertible_radius(cam)
        qd = np.array([[0.5 * r, 0.0], [0.0, 1.2 * r]])
        with pytest.raises(NonInvertibleError) as info:
            undistort(cam, qd)
        assert info.value.radius == pytest.approx(1.2 * r)

        q, valid = undistort(cam, qd, strict=False)
        np.testing.assert_array_equal(valid, [True, False])
        np.testing.assert_array_equal(q[1], qd[1])
        np.testing.assert_allclose(distort(cam, q[:1]), qd[:1], atol=1e-12)
