"""End-to-end per-image processing and the batch runner.

One manifest entry flows through: geometry load, mask load and post-process,
support gate, ground-plane fit, scale calibration, width measurement. Every
entry yields a result record (accepted, rejected, or failed); records
serialize as JSON lines in manifest order, so output is identical at any
worker count.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from sidewidth import calibrate, ingest, measure, planefit
from sidewidth.config import PipelineConfig

VARIANTS = ("full", "no_scale", "pinhole", "full_width")


@dataclass
class ImageResult:
    image_id: str
    status: str  # accepted | rejected | failed
    width_m: float | None = None
    n_valid_columns: int = 0
    scale: float | None = None
    plane_normal: tuple[float, float, float] | None = None
    plane_offset: float | None = None
    reason: str | None = None

    def to_json(self) -> str:
        plane = None
        if self.plane_normal is not None:
            plane = {"normal": list(self.plane_normal), "offset": self.plane_offset}
        return json.dumps({
            "image_id": self.image_id,
            "status": self.status,
            "width_m": self.width_m,
            "n_valid_columns": self.n_valid_columns,
            "scale": self.scale,
            "plane": plane,
            "reason": self.reason,
        })


def _pinhole_point_map(cam: calibrate.CameraModel, h_cam: float) -> ingest.PointMap:
    """Flat-ground geometry: intersect pixel rays with a horizontal plane
    h_cam below the camera, assuming a level optical axis."""
    xs = (np.arange(cam.width, dtype=np.float64) - cam.cx) / cam.fx
    ys = (np.arange(cam.height, dtype=np.float64) - cam.cy) / cam.fy
    dy = ys[:, None]
    below = dy > 1e-9
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(below, h_cam / dy, np.nan)
    depth = np.broadcast_to(t, (cam.height, cam.width)).astype(np.float32)
    return calibrate.unproject_depth(depth, cam)


def _effective_h_cam(entry, cfg: PipelineConfig, h_cam_default: float | None,
                     h_cam_force: float | None) -> float:
    if h_cam_force is not None:
        return h_cam_force
    if entry.camera_height_m is not None:
        return entry.camera_height_m
    if h_cam_default is not None:
        return h_cam_default
    return cfg.h_cam_m


def process_entry(entry: ingest.ImageManifestEntry, cfg: PipelineConfig, *,
                  variant: str = "full", geometry_source: str = "point_map",
                  calibration_mode: str = "camera_height",
                  h_cam_default: float | None = None,
                  h_cam_force: float | None = None,
                  ) -> tuple[ImageResult, measure.WidthMeasurement | None]:
    """Process one manifest entry; never raises for per-image data problems."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    try:
        return _process(entry, cfg, variant, geometry_source, calibration_mode,
                        h_cam_default, h_cam_force)
    except (ingest.IngestError, calibrate.CalibrationError, OSError, ValueError) as exc:
        return ImageResult(image_id=entry.image_id, status="failed", reason=str(exc)), None


def _process(entry, cfg, variant, geometry_source, calibration_mode,
             h_cam_default, h_cam_force):
    mask = ingest.load_mask(entry.mask_path, cfg.class_map())
    h_cam = _effective_h_cam(entry, cfg, h_cam_default, h_cam_force)

    if variant == "pinhole":
        cam = calibrate.camera_from_entry(entry, mask.width, mask.height)
        point_map = _pinhole_point_map(cam, h_cam)
    elif geometry_source == "point_map":
        point_map = ingest.load_point_map(entry.point_map_path)
    elif geometry_source == "depth_map":
        depth = ingest.load_depth_map(entry.point_map_path)
        cam = calibrate.camera_from_entry(entry, depth.shape[1], depth.shape[0])
        point_map = calibrate.unproject_depth(depth, cam)
    else:
        raise ValueError(f"unknown geometry source {geometry_source!r}")

    ingest.validate_pair(point_map, mask)

    total_px = mask.width * mask.height
    mask = ingest.postprocess_mask(
        mask,
        min_region_px=int(round(cfg.min_region_frac * total_px)),
        max_hole_px=int(round(cfg.max_hole_frac * total_px)),
    )
    support = ingest.check_support(mask, cfg.min_sidewalk_frac, cfg.min_road_frac)

    def rejected(reason):
        return ImageResult(image_id=entry.image_id, status="rejected", reason=reason), None

    if not support.accepted:
        return rejected(support.reason.replace(" ", "_"))

    ground = ((mask.classes == ingest.ROAD) | (mask.classes == ingest.SIDEWALK)) & point_map.valid
    pts = point_map.points[ground].astype(np.float64)

    centre = np.zeros(3) if entry.camera_centre is None else np.asarray(entry.camera_centre, dtype=np.float64)
    rng = np.random.default_rng(planefit.derive_seed(cfg.seed, entry.image_id))
    try:
        plane = planefit.fit_ground_plane(pts, cfg.ransac_config(), reference_centre=centre, rng=rng)
    except planefit.PlaneFitError as exc:
        return rejected(f"plane_fit_failed: {exc}")

    if variant == "no_scale" or calibration_mode == "native":
        calibration = calibrate.native_scale()
    else:
        try:
            h_pred = calibrate.predicted_camera_height(plane, centre)
        except calibrate.CalibrationError:
            return rejected("camera_on_plane")
        calibration = calibrate.scale_factor(h_cam, h_pred)

    band = 1.0 if variant == "full_width" else None
    m = measure.measure_width(point_map, mask, plane, calibration,
                              cfg.measure_config(band_fraction=band), image_id=entry.image_id)
    result = ImageResult(
        image_id=entry.image_id,
        status=m.status,
        width_m=m.width_m,
        n_valid_columns=m.n_valid_columns,
        scale=m.scale,
        plane_normal=tuple(float(v) for v in plane.normal),
        plane_offset=float(plane.offset),
        reason=m.reason,
    )
    return result, m


def run_manifest(entries, cfg: PipelineConfig, *, variant: str = "full",
                 geometry_source: str = "point_map", calibration_mode: str = "camera_height",
                 h_cam_default: float | None = None, h_cam_force: float | None = None,
                 workers: int | None = None):
    """Process entries with a bounded thread pool, preserving manifest order."""
    if workers is None:
        workers = cfg.workers or os.cpu_count() or 1

    def work(entry):
        return process_entry(entry, cfg, variant=variant, geometry_source=geometry_source,
                             calibration_mode=calibration_mode, h_cam_default=h_cam_default,
                             h_cam_force=h_cam_force)

    if workers <= 1:
        return [work(e) for e in entries]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(work, entries))


def write_results_jsonl(path, results) -> None:
    with open(path, "w") as fh:
        for record, _ in results:
            fh.write(record.to_json() + "\n")


def load_results_jsonl(path) -> list[dict]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
