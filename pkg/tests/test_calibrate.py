import numpy as np
import pytest

from sidewidth.calibrate import (
    CalibrationError,
    CameraModel,
    intrinsics_from_fov,
    native_scale,
    predicted_camera_height,
    project_point,
    scale_factor,
    unproject_depth,
)
from sidewidth.planefit import GroundPlane


def plane(n, d):
    n = np.asarray(n, dtype=np.float64)
    return GroundPlane(normal=n / np.linalg.norm(n), offset=d)


class TestPredictedHeight:
    def test_horizontal_plane(self):
        assert predicted_camera_height(plane([0, 1, 0], 0.0), (0, 2.5, 0)) == 2.5

    def test_centre_on_plane_rejected(self):
        with pytest.raises(CalibrationError, match="camera on ground plane"):
            predicted_camera_height(plane([0, 1, 0], -1.0), (3, 1, 7))

    def test_hand_value(self):
        p = plane([0, 0.6, 0.8], -1.0)
        assert predicted_camera_height(p, (0, 1, 2)) == pytest.approx(1.2, rel=1e-12)


class TestScaleFactor:
    def test_identity(self):
        assert scale_factor(2.5, 2.5).scale == 1.0

    def test_double(self):
        assert scale_factor(2.5, 1.25).scale == 2.0

    def test_zero_h_pred_rejected(self):
        with pytest.raises(CalibrationError):
            scale_factor(2.5, 0.0)

    def test_negative_h_cam_rejected(self):
        with pytest.raises(CalibrationError):
            scale_factor(-2.5, 1.0)

    def test_native_scale_is_unity(self):
        assert native_scale().scale == 1.0


class TestIntrinsicsFromFov:
    def test_ninety_degrees_square(self):
        cam = intrinsics_from_fov(90.0, 640, 640)
        assert cam.fx == pytest.approx(320.0, abs=1e-9)
        assert cam.fy == cam.fx
        assert cam.cx == 319.5 and cam.cy == 319.5

    def test_rectangular_image(self):
        cam = intrinsics_from_fov(90.0, 640, 480)
        assert cam.fx == pytest.approx(320.0, abs=1e-9)
        assert cam.fy == pytest.approx(320.0, abs=1e-9)
        assert cam.cy == 239.5

    def test_invalid_fov_rejected(self):
        with pytest.raises(CalibrationError):
            intrinsics_from_fov(180.0, 640, 640)


class TestUnproject:
    def cam(self):
        return intrinsics_from_fov(90.0, 8, 6)

    def test_principal_ray(self):
        cam = CameraModel(fx=100, fy=100, cx=2.0, cy=1.0, width=5, height=3,
                          centre=np.zeros(3))
        depth = np.full((3, 5), 5.0, dtype=np.float32)
        pm = unproject_depth(depth, cam)
        assert np.allclose(pm.points[1, 2], [0, 0, 5])

    def test_forty_five_degree_ray(self):
        cam = CameraModel(fx=2.0, fy=2.0, cx=1.0, cy=1.0, width=4, height=3,
                          centre=np.zeros(3))
        depth = np.full((3, 4), 2.0, dtype=np.float32)
        pm = unproject_depth(depth, cam)
        assert np.allclose(pm.points[1, 3], [2, 0, 2])  # u = cx + fx

    def test_invalid_depth_propagates(self):
        cam = self.cam()
        depth = np.full((6, 8), 4.0, dtype=np.float32)
        depth[2, 3] = np.nan
        depth[4, 1] = -1.0
        pm = unproject_depth(depth, cam)
        assert not pm.valid[2, 3]
        assert not pm.valid[4, 1]
        assert pm.valid.sum() == 6 * 8 - 2

    def test_round_trip_projection(self):
        cam = self.cam()
        rng = np.random.default_rng(11)
        depth = rng.uniform(1.0, 20.0, size=(6, 8)).astype(np.float32)
        pm = unproject_depth(depth, cam)
        for v, u in [(0, 0), (3, 5), (5, 7)]:
            uu, vv = project_point(pm.points[v, u].astype(np.float64), cam)
            assert uu == pytest.approx(u, abs=1e-4)
            assert vv == pytest.approx(v, abs=1e-4)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(CalibrationError, match="does not match"):
            unproject_depth(np.ones((4, 4), dtype=np.float32), self.cam())


class TestScaleCancellation:
    def test_h_pred_scales_linearly_with_k(self):
        rng = np.random.default_rng(2)
        base = rng.uniform(-1, 1, size=(200, 3))
        base[:, 1] = 0.0
        from sidewidth.planefit import fit_plane_svd

        centre = np.array([0.0, 2.0, 0.0])
        for k in (0.1, 1.0, 10.0):
            p = fit_plane_svd(base * k, reference_centre=centre * k)
            h = predicted_camera_height(p, centre * k)
            assert h == pytest.approx(2.0 * k, rel=1e-9)
            assert scale_factor(2.5, h).scale == pytest.approx(2.5 / (2.0 * k), rel=1e-9)
