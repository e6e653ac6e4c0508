"""Deterministic smoke backbone: flat-ground geometry and banded labels.

Needs no weights or network; exists so exports and the interchange round
trip can be exercised end to end. Output is a function of image size and
the camera parameters only.
"""

from __future__ import annotations

import math

import numpy as np

ROAD_ID = 0
SIDEWALK_ID = 1
OTHER_ID = 255

MAX_RANGE = 80.0


class DemoBackbone:
    def run(self, image: np.ndarray, mode: str, camera: dict) -> np.ndarray:
        h, w = image.shape[:2]
        if mode == "mask":
            return self._mask(h, w)
        depth = self._depth(h, w, camera)
        if mode == "depth":
            return depth
        if mode == "point_map":
            return self._unproject(depth, w, h, camera)
        raise ValueError(f"unsupported mode {mode!r}")

    @staticmethod
    def _mask(h: int, w: int) -> np.ndarray:
        mask = np.full((h, w), OTHER_ID, dtype=np.uint8)
        mask[int(0.55 * h):int(0.72 * h), :] = SIDEWALK_ID
        mask[int(0.72 * h):, :] = ROAD_ID
        return mask

    @staticmethod
    def _intrinsics(w: int, h: int, camera: dict):
        fov = float(camera.get("fov_deg", 90.0))
        fx = w / (2.0 * math.tan(math.radians(fov) / 2.0))
        return fx, fx, (w - 1) / 2.0, (h - 1) / 2.0

    def _depth(self, h: int, w: int, camera: dict) -> np.ndarray:
        _, fy, _, cy = self._intrinsics(w, h, camera)
        h_cam = float(camera.get("camera_height_m", 2.5))
        v = np.arange(h, dtype=np.float64)
        below = v - cy
        with np.errstate(divide="ignore"):
            depth_col = np.where(below > 0, h_cam * fy / np.maximum(below, 1e-9), MAX_RANGE)
        depth_col = np.minimum(depth_col, MAX_RANGE)
        return np.repeat(depth_col[:, None], w, axis=1).astype(np.float32)

    def _unproject(self, depth: np.ndarray, w: int, h: int, camera: dict) -> np.ndarray:
        fx, fy, cx, cy = self._intrinsics(w, h, camera)
        z = depth.astype(np.float64)
        xs = (np.arange(w, dtype=np.float64) - cx) / fx
        ys = (np.arange(h, dtype=np.float64) - cy) / fy
        points = np.empty((h, w, 3), dtype=np.float64)
        points[:, :, 0] = xs[None, :] * z
        points[:, :, 1] = ys[:, None] * z
        points[:, :, 2] = z
        return points.astype(np.float32)
