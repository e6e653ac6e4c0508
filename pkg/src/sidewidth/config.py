"""Pipeline configuration: one flat document of every tunable.

Values load from a TOML file and are validated against the constraints of
the module that owns each knob. Precedence elsewhere in the tool is
CLI flag > manifest field > config file > built-in default.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from sidewidth.ingest import ROAD, SIDEWALK
from sidewidth.measure import MeasureConfig
from sidewidth.planefit import RansacConfig


class ConfigError(ValueError):
    """Invalid configuration value or file."""


@dataclass
class PipelineConfig:
    seed: int = 0
    workers: int = 0  # 0 = logical CPU count

    # mask ingestion and gating
    road_ids: tuple[int, ...] = (0,)
    sidewalk_ids: tuple[int, ...] = (1,)
    min_region_frac: float = 0.001
    max_hole_frac: float = 0.0005
    min_sidewalk_frac: float = 0.02
    min_road_frac: float = 0.05

    # ground-plane fit
    ransac_iterations: int = 500
    mad_multiplier: float = 2.5
    mad_consistency: float = 1.4826
    clip_lo: float = 0.005
    clip_hi: float = 0.05
    min_support_points: int = 50
    min_inlier_ratio: float = 0.3
    max_score_points: int = 30_000  # 0 disables the scoring subsample cap

    # scale calibration
    h_cam_m: float = 2.5

    # width measurement
    band_fraction: float = 0.5
    min_valid_columns: int = 20
    width_min_m: float = 0.3
    width_max_m: float = 8.0
    max_dispersion: float = 0.5
    min_anisotropy: float = 1.2

    # street-network processing
    sample_interval_m: float = 30.0
    dedup_cell_m: float = 20.0

    def validate(self) -> "PipelineConfig":
        checks = [
            (self.workers >= 0, "workers must be >= 0"),
            (self.ransac_iterations >= 1, "ransac_iterations must be >= 1"),
            (0 < self.clip_lo <= self.clip_hi, "clip bounds must satisfy 0 < clip_lo <= clip_hi"),
            (self.mad_multiplier > 0, "mad_multiplier must be positive"),
            (self.mad_consistency > 0, "mad_consistency must be positive"),
            (self.min_support_points >= 3, "min_support_points must be >= 3"),
            (0 <= self.min_inlier_ratio <= 1, "min_inlier_ratio must be in [0, 1]"),
            (self.max_score_points >= 0, "max_score_points must be >= 0"),
            (self.h_cam_m > 0, "h_cam_m must be positive"),
            (0 < self.band_fraction <= 1, "band_fraction must be in (0, 1]"),
            (self.min_valid_columns >= 1, "min_valid_columns must be >= 1"),
            (0 <= self.width_min_m <= self.width_max_m, "width bounds must be ordered"),
            (self.max_dispersion >= 0, "max_dispersion must be >= 0"),
            (self.min_anisotropy >= 1, "min_anisotropy must be >= 1"),
            (0 <= self.min_region_frac <= 1, "min_region_frac must be in [0, 1]"),
            (0 <= self.max_hole_frac <= 1, "max_hole_frac must be in [0, 1]"),
            (0 <= self.min_sidewalk_frac <= 1, "min_sidewalk_frac must be in [0, 1]"),
            (0 <= self.min_road_frac <= 1, "min_road_frac must be in [0, 1]"),
            (self.sample_interval_m > 0, "sample_interval_m must be positive"),
            (self.dedup_cell_m > 0, "dedup_cell_m must be positive"),
            (len(self.road_ids) > 0, "road_ids must not be empty"),
            (len(self.sidewalk_ids) > 0, "sidewalk_ids must not be empty"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        if set(self.road_ids) & set(self.sidewalk_ids):
            raise ConfigError("road_ids and sidewalk_ids overlap")
        return self

    def class_map(self) -> dict[int, int]:
        mapping = {raw: ROAD for raw in self.road_ids}
        mapping.update({raw: SIDEWALK for raw in self.sidewalk_ids})
        return mapping

    def ransac_config(self) -> RansacConfig:
        return RansacConfig(
            iterations=self.ransac_iterations,
            seed=self.seed,
            mad_multiplier=self.mad_multiplier,
            mad_consistency=self.mad_consistency,
            clip_lo=self.clip_lo,
            clip_hi=self.clip_hi,
            min_support=self.min_support_points,
            min_inlier_ratio=self.min_inlier_ratio,
            max_score_points=self.max_score_points or None,
        )

    def measure_config(self, band_fraction: float | None = None) -> MeasureConfig:
        return MeasureConfig(
            band_fraction=self.band_fraction if band_fraction is None else band_fraction,
            min_valid_columns=self.min_valid_columns,
            width_min_m=self.width_min_m,
            width_max_m=self.width_max_m,
            max_dispersion=self.max_dispersion,
            min_anisotropy=self.min_anisotropy,
            min_plane_inlier_ratio=self.min_inlier_ratio,
        )


_FIELD_NAMES = {f.name for f in dataclasses.fields(PipelineConfig)}
_TUPLE_FIELDS = {"road_ids", "sidewalk_ids"}


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}")
    unknown = set(data) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    for key in _TUPLE_FIELDS & set(data):
        data[key] = tuple(int(v) for v in data[key])
    return PipelineConfig(**data).validate()
