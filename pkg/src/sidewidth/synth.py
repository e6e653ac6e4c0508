"""Synthetic street-scene generator with exact ground truth.

A flat world (ground plane y = 0) carries a road strip and an adjacent
sidewalk strip parallel to the travel direction; the camera sits over the
road centre at a known height and looks across the strips with a fixed
downward mount tilt plus per-scene pitch/yaw perturbations. Each pixel ray is
cast against the ground; points are emitted in camera coordinates times a
global scale, with optional radial depth noise. The float32 depth raster is
authoritative: the stored point map is its pinhole unprojection, so depth and
point-map geometry files agree bit-for-bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sidewidth.calibrate import CameraModel, unproject_depth
from sidewidth.ingest import (
    OTHER,
    ROAD,
    SIDEWALK,
    ImageManifestEntry,
    PointMap,
    SemanticMask,
    save_manifest,
    save_mask,
    save_tensor,
)

DEFAULT_IMAGE_WIDTH = 448
DEFAULT_IMAGE_HEIGHT = 832
DEFAULT_FX = 300.0
DEFAULT_FY = 750.0
DEFAULT_MOUNT_TILT_DEG = -30.0

PITCH_RANGE_DEG = (-15.0, 0.0)
YAW_RANGE_DEG = (-20.0, 20.0)


@dataclass
class SceneSpec:
    sidewalk_width_m: float
    camera_height_m: float = 2.5
    camera_pitch_deg: float = 0.0
    camera_yaw_deg: float = 0.0
    road_width_m: float = 6.0
    global_scale: float = 1.0
    noise_sigma_frac: float = 0.0
    occlusion_boxes: list[tuple[int, int, int, int]] = field(default_factory=list)  # u0, v0, u1, v1
    seed: int = 0

    def __post_init__(self):
        if self.sidewalk_width_m <= 0 or self.road_width_m <= 0 or self.camera_height_m <= 0:
            raise ValueError("widths and camera height must be positive")
        if self.noise_sigma_frac < 0:
            raise ValueError("noise_sigma_frac must be non-negative")
        if self.global_scale <= 0:
            raise ValueError("global_scale must be positive")


@dataclass
class SceneTruth:
    image_id: str
    width_m: float
    camera_height_m: float  # world metres
    h_model: float  # camera-to-plane distance in emitted units
    plane_normal: tuple[float, float, float]  # emitted camera coordinates
    plane_offset: float
    global_scale: float
    pitch_deg: float
    yaw_deg: float
    tilt_deg: float
    sidewalk_inner_x_m: float
    sidewalk_outer_x_m: float


def default_camera(width: int = DEFAULT_IMAGE_WIDTH, height: int = DEFAULT_IMAGE_HEIGHT,
                   fx: float = DEFAULT_FX, fy: float = DEFAULT_FY) -> CameraModel:
    return CameraModel(fx=fx, fy=fy, cx=(width - 1) / 2.0, cy=(height - 1) / 2.0,
                       width=width, height=height, centre=np.zeros(3))


def _camera_rotation(tilt_deg: float, pitch_deg: float, yaw_deg: float) -> np.ndarray:
    """Camera-to-world rotation: base view across the strips, then tilt+pitch
    about the camera x axis (negative = down), then yaw about world up."""
    base = np.array([[0.0, 0.0, 1.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]])
    a = math.radians(tilt_deg + pitch_deg)
    rx = np.array([[1.0, 0.0, 0.0],
                   [0.0, math.cos(a), -math.sin(a)],
                   [0.0, math.sin(a), math.cos(a)]])
    b = math.radians(yaw_deg)
    ry = np.array([[math.cos(b), 0.0, math.sin(b)],
                   [0.0, 1.0, 0.0],
                   [-math.sin(b), 0.0, math.cos(b)]])
    return ry @ base @ rx


def generate_scene(spec: SceneSpec, cam: CameraModel | None = None,
                   mount_tilt_deg: float = DEFAULT_MOUNT_TILT_DEG,
                   image_id: str = "scene") -> tuple[PointMap, SemanticMask, SceneTruth]:
    """Render one scene: point map, semantic mask, and ground truth."""
    cam = default_camera() if cam is None else cam
    h = spec.camera_height_m
    half_road = spec.road_width_m / 2.0
    inner_x = half_road
    outer_x = half_road + spec.sidewalk_width_m

    rot = _camera_rotation(mount_tilt_deg, spec.camera_pitch_deg, spec.camera_yaw_deg)
    xs = (np.arange(cam.width, dtype=np.float64) - cam.cx) / cam.fx
    ys = (np.arange(cam.height, dtype=np.float64) - cam.cy) / cam.fy
    dx = xs[None, :]
    dy = ys[:, None]
    d_wx = rot[0, 0] * dx + rot[0, 1] * dy + rot[0, 2]
    d_wy = rot[1, 0] * dx + rot[1, 1] * dy + rot[1, 2]

    ground = d_wy < -1e-12
    if not ground.any():
        raise ValueError("no ground pixels in view")
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(ground, h / -d_wy, np.nan)
    lateral = t * d_wx

    classes = np.full((cam.height, cam.width), OTHER, dtype=np.uint8)
    classes[ground & (lateral >= -half_road) & (lateral < inner_x)] = ROAD
    classes[ground & (lateral >= inner_x) & (lateral < outer_x)] = SIDEWALK
    if not (classes == SIDEWALK).any():
        raise ValueError("sidewalk not in view")
    for u0, v0, u1, v1 in spec.occlusion_boxes:
        classes[v0:v1, u0:u1] = OTHER

    depth = t
    if spec.noise_sigma_frac > 0:
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
        depth = depth * (1.0 + spec.noise_sigma_frac * rng.standard_normal(depth.shape))
    depth = (spec.global_scale * depth).astype(np.float32)

    point_map = unproject_depth(depth, cam)
    mask = SemanticMask(width=cam.width, height=cam.height, classes=classes)
    truth = SceneTruth(
        image_id=image_id,
        width_m=spec.sidewalk_width_m,
        camera_height_m=h,
        h_model=spec.global_scale * h,
        plane_normal=tuple(float(v) for v in rot[1, :]),
        plane_offset=spec.global_scale * h,
        global_scale=spec.global_scale,
        pitch_deg=spec.camera_pitch_deg,
        yaw_deg=spec.camera_yaw_deg,
        tilt_deg=mount_tilt_deg,
        sidewalk_inner_x_m=inner_x,
        sidewalk_outer_x_m=outer_x,
    )
    return point_map, mask, truth


def render_depth(point_map: PointMap) -> np.ndarray:
    """Depth raster (z channel) of a point map; invalid pixels become NaN."""
    depth = point_map.points[:, :, 2].astype(np.float32).copy()
    depth[~point_map.valid] = np.nan
    return depth


def generate_benchmark(n_scenes: int, width_range_m: tuple[float, float], seed: int,
                       out_dir, *, noise_sigma_frac: float = 0.0,
                       global_scale_range: tuple[float, float] = (1.0, 1.0),
                       camera_height_m: float = 2.5, road_width_m: float = 6.0,
                       mount_tilt_deg: float = DEFAULT_MOUNT_TILT_DEG,
                       cam: CameraModel | None = None,
                       with_depth: bool = False) -> Path:
    """Write a benchmark of scenes plus manifest and truth sidecar.

    Returns the manifest path. With ``with_depth``, per-scene (H, W, 1) depth
    tensors and a companion ``manifest_depth.json`` are written as well.
    """
    if n_scenes < 1:
        raise ValueError("n_scenes must be >= 1")
    lo, hi = width_range_m
    if not (0 < lo <= hi):
        raise ValueError(f"bad width range {width_range_m}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cam = default_camera() if cam is None else cam
    fov_deg = math.degrees(2.0 * math.atan((cam.width / 2.0) / cam.fx))

    entries = []
    depth_entries = []
    truths = {}
    for i in range(n_scenes):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        width = float(rng.uniform(lo, hi))
        pitch = float(rng.uniform(*PITCH_RANGE_DEG))
        yaw = float(rng.uniform(*YAW_RANGE_DEG))
        gscale = float(rng.uniform(*global_scale_range))
        scene_seed = int(np.random.SeedSequence([seed, i, 1]).generate_state(1)[0])
        spec = SceneSpec(
            sidewalk_width_m=width,
            camera_height_m=camera_height_m,
            camera_pitch_deg=pitch,
            camera_yaw_deg=yaw,
            road_width_m=road_width_m,
            global_scale=gscale,
            noise_sigma_frac=noise_sigma_frac,
            seed=scene_seed,
        )
        image_id = f"scene_{i:04d}"
        point_map, mask, truth = generate_scene(spec, cam, mount_tilt_deg, image_id=image_id)

        pm_path = out_dir / f"{image_id}.npy"
        mask_path = out_dir / f"{image_id}_mask.png"
        save_tensor(pm_path, point_map.points)
        save_mask(mask_path, mask)
        common = dict(
            camera_height_m=camera_height_m,
            fov_deg=fov_deg,
            intrinsics=(cam.fx, cam.fy, cam.cx, cam.cy),
            reference_width_m=width,
        )
        entries.append(ImageManifestEntry(
            image_id=image_id, point_map_path=str(pm_path), mask_path=str(mask_path), **common))
        if with_depth:
            depth_path = out_dir / f"{image_id}_depth.npy"
            save_tensor(depth_path, render_depth(point_map)[:, :, None])
            depth_entries.append(ImageManifestEntry(
                image_id=image_id, point_map_path=str(depth_path), mask_path=str(mask_path), **common))
        truths[image_id] = truth.__dict__.copy()

    manifest_path = out_dir / "manifest.json"
    save_manifest(manifest_path, entries, relative_to=out_dir)
    if with_depth:
        save_manifest(out_dir / "manifest_depth.json", depth_entries, relative_to=out_dir)
    (out_dir / "truth.json").write_text(json.dumps(truths, indent=2) + "\n")
    return manifest_path
