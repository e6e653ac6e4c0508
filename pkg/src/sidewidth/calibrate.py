"""Metric scale recovery from camera mounting height, and pinhole geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sidewidth.ingest import PointMap
from sidewidth.planefit import GroundPlane

MIN_PREDICTED_HEIGHT = 1e-6


class CalibrationError(ValueError):
    """Scale calibration cannot proceed (degenerate geometry or inputs)."""


@dataclass
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    centre: np.ndarray  # camera centre in model units

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise CalibrationError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise CalibrationError("principal point outside image")


@dataclass
class ScaleCalibration:
    h_cam: float  # metres
    h_pred: float  # model units
    scale: float  # metres per model unit


def predicted_camera_height(plane: GroundPlane, centre) -> float:
    """Distance |n.c + d| from the camera centre to the fitted plane."""
    h_pred = abs(plane.signed_distance(centre))
    if h_pred < MIN_PREDICTED_HEIGHT:
        raise CalibrationError("camera on ground plane")
    return h_pred


def scale_factor(h_cam: float, h_pred: float) -> ScaleCalibration:
    """Metres-per-model-unit scale h_cam / h_pred."""
    if h_cam <= 0:
        raise CalibrationError(f"camera height must be positive, got {h_cam}")
    if h_pred <= 0:
        raise CalibrationError(f"predicted height must be positive, got {h_pred}")
    return ScaleCalibration(h_cam=h_cam, h_pred=h_pred, scale=h_cam / h_pred)


def native_scale() -> ScaleCalibration:
    """Identity calibration for geometry that is already metric."""
    return ScaleCalibration(h_cam=1.0, h_pred=1.0, scale=1.0)


def intrinsics_from_fov(fov_deg: float, width: int, height: int) -> CameraModel:
    """Square-pixel intrinsics from a horizontal field of view.

    Principal point uses the pixel-centre convention (dim - 1) / 2.
    """
    if not (0.0 < fov_deg < 180.0):
        raise CalibrationError(f"fov_deg must be in (0, 180), got {fov_deg}")
    fx = width / (2.0 * math.tan(math.radians(fov_deg) / 2.0))
    return CameraModel(
        fx=fx,
        fy=fx,
        cx=(width - 1) / 2.0,
        cy=(height - 1) / 2.0,
        width=width,
        height=height,
        centre=np.zeros(3),
    )


def camera_from_entry(entry, width: int, height: int) -> CameraModel:
    """Camera for a manifest entry: explicit intrinsics win over fov_deg."""
    centre = np.zeros(3) if entry.camera_centre is None else np.asarray(entry.camera_centre, dtype=np.float64)
    if entry.intrinsics is not None:
        fx, fy, cx, cy = entry.intrinsics
        return CameraModel(fx=fx, fy=fy, cx=cx, cy=cy, width=width, height=height, centre=centre)
    cam = intrinsics_from_fov(entry.fov_deg, width, height)
    cam.centre = centre
    return cam


def unproject_depth(depth: np.ndarray, cam: CameraModel) -> PointMap:
    """Back-project a depth map: (u, v, z) -> ((u-cx) z / fx, (v-cy) z / fy, z).

    Non-finite or non-positive depths yield invalid points.
    """
    if depth.shape != (cam.height, cam.width):
        raise CalibrationError(
            f"depth shape {depth.shape} does not match camera {cam.height}x{cam.width}"
        )
    z = depth.astype(np.float64, copy=False)
    xs = (np.arange(cam.width, dtype=np.float64) - cam.cx) / cam.fx
    ys = (np.arange(cam.height, dtype=np.float64) - cam.cy) / cam.fy
    points = np.empty((cam.height, cam.width, 3), dtype=np.float64)
    points[:, :, 0] = xs[None, :] * z
    points[:, :, 1] = ys[:, None] * z
    points[:, :, 2] = z
    invalid = ~np.isfinite(z) | (z <= 0)
    points[invalid] = np.nan
    return PointMap(width=cam.width, height=cam.height,
                    points=points.astype(np.float32), valid=~invalid)


def project_point(point, cam: CameraModel) -> tuple[float, float]:
    """Forward pinhole projection of a 3D point to pixel coordinates."""
    x, y, z = (float(v) for v in point)
    if z <= 0:
        raise CalibrationError("cannot project a point at non-positive depth")
    return (cam.cx + x * cam.fx / z, cam.cy + y * cam.fy / z)
