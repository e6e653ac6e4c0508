"""Column-wise sidewalk width measurement on the fitted ground plane.

Columns inside a central band are scanned for their most plausible sidewalk
run; the run's boundary pixels are lifted to 3D, projected onto the plane,
and measured along the across-sidewalk direction estimated from the boundary
geometry. Per-column widths are aggregated by the median behind a set of
plausibility gates; failing any gate rejects the image rather than emitting
an implausible value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from sidewidth.calibrate import ScaleCalibration
from sidewidth.ingest import OTHER, ROAD, SIDEWALK, PointMap, SemanticMask
from sidewidth.planefit import GroundPlane, mad


class DirectionAmbiguous(ValueError):
    """Boundary midpoints carry no usable along-street axis."""


@dataclass
class MeasureConfig:
    band_fraction: float = 0.5
    min_valid_columns: int = 20
    width_min_m: float = 0.3
    width_max_m: float = 8.0
    max_dispersion: float = 0.5  # MAD / median of per-column widths
    min_anisotropy: float = 1.2
    min_plane_inlier_ratio: float = 0.3


@dataclass
class ColumnSample:
    column: int
    inner_px: tuple[int, int] | None = None  # (u, v)
    outer_px: tuple[int, int] | None = None
    inner_3d: np.ndarray | None = None
    outer_3d: np.ndarray | None = None
    width_model: float | None = None
    valid: bool = False
    reason: str | None = None


@dataclass
class WidthMeasurement:
    image_id: str
    status: str  # "accepted" | "rejected"
    width_m: float | None = None
    scale: float | None = None
    n_valid_columns: int = 0
    column_samples: list[ColumnSample] = field(default_factory=list)
    per_column_widths_m: list[float] = field(default_factory=list)
    reason: str | None = None
    plane: GroundPlane | None = None

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"


def central_band(width_px: int, band_fraction: float) -> range:
    """Contiguous centred column range of length round(fraction * width)."""
    if not (0.0 < band_fraction <= 1.0):
        raise ValueError(f"band_fraction must be in (0, 1], got {band_fraction}")
    length = max(int(round(band_fraction * width_px)), 1)
    start = (width_px - length) // 2
    return range(start, start + length)


def select_column_segment(mask_column: np.ndarray) -> tuple[int, int] | None:
    """Pick the most plausible sidewalk run in one mask column.

    Longest run wins; ties go to the run ending nearest the image bottom.
    Returns (inner_row, outer_row) where the inner end faces the road when
    adjacent road pixels identify a road side, else the image bottom.
    """
    sw = mask_column == SIDEWALK
    if not sw.any():
        return None
    edges = np.diff(np.concatenate(([0], sw.view(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    lengths = ends - starts + 1
    best = max(range(len(starts)), key=lambda i: (lengths[i], ends[i]))
    r0, r1 = int(starts[best]), int(ends[best])

    below = mask_column[r1 + 1:]
    hit = np.flatnonzero(below != OTHER)
    cls_below = int(below[hit[0]]) if hit.size else None
    above = mask_column[:r0][::-1]
    hit = np.flatnonzero(above != OTHER)
    cls_above = int(above[hit[0]]) if hit.size else None

    if cls_below != ROAD and cls_above == ROAD:
        return r0, r1
    return r1, r0


def project_to_plane(point, plane: GroundPlane) -> np.ndarray:
    """Orthogonal projection x - (n.x + d) n onto the plane."""
    p = np.asarray(point, dtype=np.float64)
    return p - plane.signed_distance(p) * plane.normal


def plane_basis(plane: GroundPlane) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal in-plane basis (e1, e2)."""
    n = plane.normal
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) <= 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(a, n)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def across_direction(samples: list[ColumnSample], plane: GroundPlane,
                     min_anisotropy: float = 1.2) -> np.ndarray:
    """Across-sidewalk unit vector from the projected boundary midpoints.

    The dominant in-plane scatter axis of the midpoints is taken as the
    along-street direction; the across direction is its in-plane normal,
    signed so (outer - inner) projects non-negatively on average. Raises
    DirectionAmbiguous when the scatter is too isotropic.
    """
    mids = np.array([(s.inner_3d + s.outer_3d) * 0.5 for s in samples])
    e1, e2 = plane_basis(plane)
    coords = np.column_stack((mids @ e1, mids @ e2))
    centred = coords - coords.mean(axis=0)
    cov = centred.T @ centred / len(coords)
    evals, evecs = np.linalg.eigh(cov)
    lo, hi = max(float(evals[0]), 0.0), float(evals[1])
    if hi <= 0.0:
        raise DirectionAmbiguous("boundary midpoints are coincident")
    ratio = np.inf if lo == 0.0 else float(np.sqrt(hi / lo))
    if ratio < min_anisotropy:
        raise DirectionAmbiguous(
            f"across-sidewalk direction ambiguous (axis ratio {ratio:.3f} < {min_anisotropy})"
        )
    along = evecs[:, 1]
    perp = np.array([-along[1], along[0]])
    across = perp[0] * e1 + perp[1] * e2
    across /= np.linalg.norm(across)
    spans = np.array([s.outer_3d - s.inner_3d for s in samples])
    if float(np.mean(spans @ across)) < 0.0:
        across = -across
    return across


def column_width(sample: ColumnSample, direction: np.ndarray) -> float:
    """Boundary separation along the across direction, in model units."""
    return float(abs(np.dot(sample.outer_3d - sample.inner_3d, direction)))


def _scan_columns(point_map: PointMap, mask: SemanticMask, plane: GroundPlane,
                  band: range) -> list[ColumnSample]:
    samples = []
    classes = mask.classes
    for u in band:
        run = select_column_segment(classes[:, u])
        if run is None:
            samples.append(ColumnSample(column=u, reason="no_sidewalk_run"))
            continue
        inner_row, outer_row = run
        if not (point_map.valid[inner_row, u] and point_map.valid[outer_row, u]):
            samples.append(ColumnSample(column=u, inner_px=(u, inner_row),
                                        outer_px=(u, outer_row), reason="invalid_3d"))
            continue
        inner = project_to_plane(point_map.points[inner_row, u].astype(np.float64), plane)
        outer = project_to_plane(point_map.points[outer_row, u].astype(np.float64), plane)
        samples.append(ColumnSample(column=u, inner_px=(u, inner_row), outer_px=(u, outer_row),
                                    inner_3d=inner, outer_3d=outer, valid=True))
    return samples


def measure_width(point_map: PointMap, mask: SemanticMask, plane: GroundPlane,
                  calibration: ScaleCalibration, config: MeasureConfig | None = None,
                  image_id: str = "") -> WidthMeasurement:
    """Measure the calibrated sidewalk width for one image."""
    config = MeasureConfig() if config is None else config

    def rejected(reason, samples=(), n_valid=0):
        return WidthMeasurement(image_id=image_id, status="rejected", reason=reason,
                                scale=calibration.scale, plane=plane,
                                column_samples=list(samples), n_valid_columns=n_valid)

    if plane.inlier_ratio is not None and plane.inlier_ratio < config.min_plane_inlier_ratio:
        return rejected("low_inlier_ratio")

    band = central_band(mask.width, config.band_fraction)
    samples = _scan_columns(point_map, mask, plane, band)
    valid = [s for s in samples if s.valid]
    if len(valid) < config.min_valid_columns:
        return rejected("insufficient_valid_columns", samples, len(valid))

    try:
        direction = across_direction(valid, plane, config.min_anisotropy)
    except DirectionAmbiguous:
        return rejected("ambiguous_direction", samples, len(valid))

    for s in valid:
        s.width_model = column_width(s, direction)
    widths_m = [s.width_model * calibration.scale for s in valid]

    median_m = float(np.median(widths_m))
    if median_m <= 0.0 or mad(widths_m) / median_m > config.max_dispersion:
        return rejected("excessive_dispersion", samples, len(valid))
    if not (config.width_min_m <= median_m <= config.width_max_m):
        return rejected("implausible_width", samples, len(valid))

    return WidthMeasurement(
        image_id=image_id,
        status="accepted",
        width_m=median_m,
        scale=calibration.scale,
        n_valid_columns=len(valid),
        column_samples=samples,
        per_column_widths_m=widths_m,
        plane=plane,
    )
