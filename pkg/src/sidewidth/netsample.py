"""Street-network sampling, grid deduplication, and segment aggregation.

Geodesy uses a local equirectangular approximation (metres per degree from
the reference latitude, IUGG mean Earth radius); error is negligible at
neighbourhood scale.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

EARTH_RADIUS_M = 6_371_008.8
_M_PER_DEG = math.pi / 180.0 * EARTH_RADIUS_M

BEARING_CHORD_HALF_M = 15.0


class NetworkError(ValueError):
    """Malformed street-network input."""


@dataclass
class LocalFrame:
    """Equirectangular x/y metres around a reference lon/lat."""

    lon0: float
    lat0: float

    def to_xy(self, lon: float, lat: float) -> tuple[float, float]:
        x = (lon - self.lon0) * _M_PER_DEG * math.cos(math.radians(self.lat0))
        y = (lat - self.lat0) * _M_PER_DEG
        return x, y

    def to_lonlat(self, x: float, y: float) -> tuple[float, float]:
        lon = self.lon0 + x / (_M_PER_DEG * math.cos(math.radians(self.lat0)))
        lat = self.lat0 + y / _M_PER_DEG
        return lon, lat


@dataclass
class StreetSegment:
    segment_id: str
    polyline: list[tuple[float, float]]  # (lon, lat)
    length_m: float = field(init=False)

    def __post_init__(self):
        if len(self.polyline) < 2:
            raise NetworkError(f"{self.segment_id}: polyline needs >= 2 vertices")
        frame = self.frame()
        xy = np.array([frame.to_xy(lon, lat) for lon, lat in self.polyline])
        steps = np.linalg.norm(np.diff(xy, axis=0), axis=1)
        self.length_m = float(steps.sum())
        if self.length_m <= 0:
            raise NetworkError(f"{self.segment_id}: zero-length segment")

    def frame(self) -> LocalFrame:
        lons = [p[0] for p in self.polyline]
        lats = [p[1] for p in self.polyline]
        return LocalFrame(lon0=sum(lons) / len(lons), lat0=sum(lats) / len(lats))


@dataclass
class SamplePoint:
    segment_id: str
    position: tuple[float, float]  # (lon, lat)
    chainage_m: float
    bearing_deg: float
    headings_deg: tuple[float, float]


@dataclass
class SegmentRecord:
    segment_id: str
    n_measurements: int
    median_width_m: float
    widths_m: list[float]


@dataclass
class CoverageReport:
    covered: int
    total: int
    coverage_pct: float
    median_of_medians_m: float | None


def _interp_xy(xy: np.ndarray, cum: np.ndarray, chainage: float) -> tuple[float, float]:
    x = float(np.interp(chainage, cum, xy[:, 0]))
    y = float(np.interp(chainage, cum, xy[:, 1]))
    return x, y


def sample_segment(segment: StreetSegment, interval_m: float) -> list[SamplePoint]:
    """Sample points at fixed chainages 0, interval, ... strictly below the
    segment length; bearings come from a +/-15 m local chord."""
    if interval_m <= 0:
        raise ValueError("interval_m must be positive")
    frame = segment.frame()
    xy = np.array([frame.to_xy(lon, lat) for lon, lat in segment.polyline])
    steps = np.linalg.norm(np.diff(xy, axis=0), axis=1)
    cum = np.concatenate(([0.0], np.cumsum(steps)))
    length = segment.length_m

    points = []
    chainage = 0.0
    while chainage < length - 1e-9:
        px, py = _interp_xy(xy, cum, chainage)
        ax, ay = _interp_xy(xy, cum, max(0.0, chainage - BEARING_CHORD_HALF_M))
        bx, by = _interp_xy(xy, cum, min(length, chainage + BEARING_CHORD_HALF_M))
        bearing = math.degrees(math.atan2(bx - ax, by - ay)) % 360.0
        points.append(SamplePoint(
            segment_id=segment.segment_id,
            position=frame.to_lonlat(px, py),
            chainage_m=chainage,
            bearing_deg=bearing,
            headings_deg=((bearing + 90.0) % 360.0, (bearing - 90.0) % 360.0),
        ))
        chainage += interval_m
    return points


def dedup_grid(points: list[SamplePoint], cell_m: float) -> list[SamplePoint]:
    """Keep one point per cell of an axis-aligned metric grid.

    Points are sorted by (segment_id, chainage) before bucketing, so the
    survivor set does not depend on input order.
    """
    if cell_m <= 0:
        raise ValueError("cell_m must be positive")
    if not points:
        return []
    # Anchor the grid at the bounding-box corner: exact under permutation and
    # keeps nearby points from straddling a cell boundary at the anchor.
    lon0 = min(p.position[0] for p in points)
    lat0 = min(p.position[1] for p in points)
    frame = LocalFrame(lon0=lon0, lat0=lat0)
    ordered = sorted(points, key=lambda p: (p.segment_id, p.chainage_m))
    seen: set[tuple[int, int]] = set()
    kept = []
    for p in ordered:
        x, y = frame.to_xy(*p.position)
        cell = (math.floor(x / cell_m), math.floor(y / cell_m))
        if cell in seen:
            continue
        seen.add(cell)
        kept.append(p)
    return kept


def aggregate_segments(measurements) -> list[SegmentRecord]:
    """Group (segment_id, width_m) pairs and take the median per segment."""
    groups: dict[str, list[float]] = {}
    for segment_id, width in measurements:
        groups.setdefault(segment_id, []).append(float(width))
    records = []
    for segment_id in sorted(groups):
        widths = sorted(groups[segment_id])
        records.append(SegmentRecord(
            segment_id=segment_id,
            n_measurements=len(widths),
            median_width_m=float(np.median(widths)),
            widths_m=widths,
        ))
    return records


def pairs_from_results(records, entries):
    """(segment_id, width_m) pairs for accepted results joined via manifest."""
    segs = {e.image_id: e.segment_id for e in entries if e.segment_id is not None}
    pairs = []
    for rec in records:
        image_id = rec["image_id"] if isinstance(rec, dict) else rec.image_id
        status = rec["status"] if isinstance(rec, dict) else rec.status
        width = rec["width_m"] if isinstance(rec, dict) else rec.width_m
        if status == "accepted" and image_id in segs:
            pairs.append((segs[image_id], width))
    return pairs


def _round_half_up_1dp(value: float) -> float:
    return float(Decimal(repr(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def coverage_report(records: list[SegmentRecord], segments: list[StreetSegment]) -> CoverageReport:
    covered_ids = {r.segment_id for r in records}
    total = len(segments)
    covered = len(covered_ids)
    pct = _round_half_up_1dp(100.0 * covered / total) if total else 0.0
    medians = [r.median_width_m for r in records]
    return CoverageReport(
        covered=covered,
        total=total,
        coverage_pct=pct,
        median_of_medians_m=float(np.median(medians)) if medians else None,
    )


def load_network_geojson(path) -> list[StreetSegment]:
    """Read LineString features with a segment_id property."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise NetworkError(f"{path}: file not found")
    except json.JSONDecodeError as exc:
        raise NetworkError(
            f"{path}: invalid GeoJSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
    if data.get("type") != "FeatureCollection":
        raise NetworkError(f"{path}: expected a FeatureCollection")
    segments = []
    for i, feature in enumerate(data.get("features", [])):
        geom = feature.get("geometry") or {}
        if geom.get("type") != "LineString":
            continue
        props = feature.get("properties") or {}
        segment_id = props.get("segment_id", feature.get("id"))
        if segment_id is None:
            raise NetworkError(f"{path}: feature {i} lacks a segment_id property")
        coords = [(float(lon), float(lat)) for lon, lat in geom["coordinates"]]
        segments.append(StreetSegment(segment_id=str(segment_id), polyline=coords))
    if not segments:
        raise NetworkError(f"{path}: no LineString features found")
    return segments


def save_segment_records_geojson(path, records: list[SegmentRecord],
                                 segments: list[StreetSegment]) -> None:
    geometry = {s.segment_id: s.polyline for s in segments}
    features = []
    for rec in records:
        coords = geometry.get(rec.segment_id)
        if coords is None:
            continue
        features.append({
            "type": "Feature",
            "properties": {
                "segment_id": rec.segment_id,
                "n_measurements": rec.n_measurements,
                "median_width_m": rec.median_width_m,
            },
            "geometry": {"type": "LineString", "coordinates": [list(c) for c in coords]},
        })
    payload = {"type": "FeatureCollection", "features": features}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")
