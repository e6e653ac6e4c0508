"""Metric sidewalk-width measurement from dense 3D point maps and masks."""

__version__ = "0.1.0"

from sidewidth.calibrate import (
    CameraModel,
    ScaleCalibration,
    intrinsics_from_fov,
    predicted_camera_height,
    scale_factor,
    unproject_depth,
)
from sidewidth.config import PipelineConfig, load_config
from sidewidth.ingest import (
    ImageManifestEntry,
    PointMap,
    SemanticMask,
    check_support,
    load_manifest,
    load_mask,
    load_point_map,
    postprocess_mask,
)
from sidewidth.measure import MeasureConfig, WidthMeasurement, measure_width
from sidewidth.planefit import GroundPlane, RansacConfig, fit_ground_plane
from sidewidth.synth import SceneSpec, generate_benchmark, generate_scene

__all__ = [
    "CameraModel",
    "GroundPlane",
    "ImageManifestEntry",
    "MeasureConfig",
    "PipelineConfig",
    "PointMap",
    "RansacConfig",
    "ScaleCalibration",
    "SceneSpec",
    "SemanticMask",
    "WidthMeasurement",
    "check_support",
    "fit_ground_plane",
    "generate_benchmark",
    "generate_scene",
    "intrinsics_from_fov",
    "load_config",
    "load_manifest",
    "load_mask",
    "load_point_map",
    "measure_width",
    "postprocess_mask",
    "predicted_camera_height",
    "scale_factor",
    "unproject_depth",
]
