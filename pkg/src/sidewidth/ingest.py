"""Interchange formats and domain types for point maps, masks, and manifests.

Point maps and depth maps travel as float32 ``.npy`` tensors (shape (H, W, 3)
or (H, W, 1)); masks as 8-bit single-channel PNG; manifests as a JSON array.
All loaders validate and report the offending path and reason.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

ROAD = 0
SIDEWALK = 1
OTHER = 255

DEFAULT_CLASS_MAP = {0: ROAD, 1: SIDEWALK}

_CONNECTIVITY_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


class IngestError(ValueError):
    """Malformed or mismatched input file."""


@dataclass
class PointMap:
    """Dense H x W grid of (x, y, z) points in arbitrary model units."""

    width: int
    height: int
    points: np.ndarray  # (H, W, 3) float32
    valid: np.ndarray  # (H, W) bool

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise IngestError(f"non-positive dimensions {self.width}x{self.height}")
        if self.points.shape != (self.height, self.width, 3):
            raise IngestError(
                f"points shape {self.points.shape} does not match "
                f"{self.height}x{self.width}x3"
            )
        if self.valid.shape != (self.height, self.width):
            raise IngestError("valid mask shape does not match dimensions")

    @classmethod
    def from_array(cls, points: np.ndarray) -> "PointMap":
        """Build a PointMap, deriving validity from per-pixel finiteness."""
        valid = np.isfinite(points).all(axis=2)
        h, w = points.shape[:2]
        return cls(width=w, height=h, points=points, valid=valid)


@dataclass
class SemanticMask:
    """H x W class-id raster using the ROAD/SIDEWALK/OTHER convention."""

    width: int
    height: int
    classes: np.ndarray  # (H, W) uint8
    postprocessed: bool = False

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise IngestError(f"non-positive dimensions {self.width}x{self.height}")
        if self.classes.shape != (self.height, self.width):
            raise IngestError("classes shape does not match dimensions")

    def class_fraction(self, class_id: int) -> float:
        return float(np.count_nonzero(self.classes == class_id)) / (self.width * self.height)


@dataclass
class ImageManifestEntry:
    image_id: str
    point_map_path: str
    mask_path: str
    camera_height_m: float | None = None
    fov_deg: float = 90.0
    intrinsics: tuple[float, float, float, float] | None = None  # fx, fy, cx, cy
    camera_centre: tuple[float, float, float] | None = None
    geo: tuple[float, float, float] | None = None  # lat, lon, heading_deg
    segment_id: str | None = None
    reference_width_m: float | None = None

    def __post_init__(self):
        if self.camera_height_m is not None and self.camera_height_m <= 0:
            raise IngestError(f"{self.image_id}: camera_height_m must be positive")
        if not (0.0 < self.fov_deg < 180.0):
            raise IngestError(f"{self.image_id}: fov_deg must be in (0, 180)")


@dataclass
class SupportDecision:
    accepted: bool
    reason: str | None
    sidewalk_frac: float
    road_frac: float


def save_tensor(path, array: np.ndarray) -> None:
    """Write a float32 tensor in the interchange layout (C-order .npy)."""
    np.save(path, np.ascontiguousarray(array, dtype=np.float32))


def _load_tensor(path, last_dim: int) -> np.ndarray:
    path = Path(path)
    try:
        arr = np.load(path, allow_pickle=False)
    except FileNotFoundError:
        raise IngestError(f"{path}: file not found")
    except Exception as exc:
        raise IngestError(f"{path}: malformed header ({exc})")
    if arr.dtype != np.float32:
        raise IngestError(f"{path}: unsupported element type {arr.dtype}, expected float32")
    if arr.ndim != 3:
        raise IngestError(f"{path}: wrong rank {arr.ndim}, expected 3")
    if arr.shape[2] != last_dim:
        raise IngestError(f"{path}: wrong last dimension {arr.shape[2]}, expected {last_dim}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise IngestError(f"{path}: zero-sized dimension in shape {arr.shape}")
    return np.ascontiguousarray(arr)


def load_point_map(path) -> PointMap:
    """Load an (H, W, 3) float32 tensor; validity follows finiteness."""
    return PointMap.from_array(_load_tensor(path, 3))


def load_depth_map(path) -> np.ndarray:
    """Load an (H, W, 1) float32 depth tensor as an (H, W) array."""
    return _load_tensor(path, 1)[:, :, 0]


def save_mask(path, mask: SemanticMask) -> None:
    Image.fromarray(mask.classes.astype(np.uint8), mode="L").save(path, format="PNG")


def load_mask(path, class_map: dict[int, int] | None = None) -> SemanticMask:
    """Load an 8-bit single-channel PNG and remap raw ids to ROAD/SIDEWALK.

    Raw ids absent from class_map become OTHER.
    """
    path = Path(path)
    class_map = DEFAULT_CLASS_MAP if class_map is None else class_map
    try:
        img = Image.open(path)
        if img.mode == "P":
            img = img.convert("L")
        if img.mode != "L":
            raise IngestError(f"{path}: not an 8-bit single-channel raster (mode {img.mode})")
        raw = np.asarray(img, dtype=np.uint8)
    except IngestError:
        raise
    except Exception as exc:
        raise IngestError(f"{path}: unreadable raster ({exc})")
    if raw.ndim != 2 or raw.shape[0] == 0 or raw.shape[1] == 0:
        raise IngestError(f"{path}: zero-sized raster")
    lut = np.full(256, OTHER, dtype=np.uint8)
    for raw_id, cls in class_map.items():
        lut[raw_id] = cls
    classes = lut[raw]
    h, w = classes.shape
    return SemanticMask(width=w, height=h, classes=classes)


def validate_pair(point_map: PointMap, mask: SemanticMask) -> None:
    if (point_map.width, point_map.height) != (mask.width, mask.height):
        raise IngestError(
            f"dimension mismatch: point map {point_map.width}x{point_map.height} "
            f"vs mask {mask.width}x{mask.height}"
        )


def postprocess_mask(mask: SemanticMask, min_region_px: int, max_hole_px: int) -> SemanticMask:
    """Remove small road/sidewalk components and fill small enclosed holes.

    4-connected components of each class with area < min_region_px are
    relabelled OTHER; OTHER components smaller than max_hole_px that are fully
    enclosed by a single class (no border contact) take that class.
    """
    classes = mask.classes.copy()

    for cls in (ROAD, SIDEWALK):
        binary = classes == cls
        if not binary.any():
            continue
        labels, n = ndimage.label(binary, structure=_CONNECTIVITY_4)
        if n == 0:
            continue
        areas = np.bincount(labels.ravel())
        small = np.flatnonzero(areas[1:] < min_region_px) + 1
        if small.size:
            classes[np.isin(labels, small)] = OTHER

    holes = classes == OTHER
    if holes.any():
        labels, n = ndimage.label(holes, structure=_CONNECTIVITY_4)
        border = set(np.unique(labels[0, :])) | set(np.unique(labels[-1, :]))
        border |= set(np.unique(labels[:, 0])) | set(np.unique(labels[:, -1]))
        areas = np.bincount(labels.ravel())
        for comp in range(1, n + 1):
            if comp in border or areas[comp] >= max_hole_px:
                continue
            region = labels == comp
            ring = ndimage.binary_dilation(region, structure=_CONNECTIVITY_4) & ~region
            neighbours = np.unique(classes[ring])
            if neighbours.size == 1 and neighbours[0] in (ROAD, SIDEWALK):
                classes[region] = neighbours[0]

    return SemanticMask(width=mask.width, height=mask.height, classes=classes, postprocessed=True)


def check_support(mask: SemanticMask, min_sidewalk_frac: float, min_road_frac: float) -> SupportDecision:
    """Accept iff both class fractions clear their thresholds."""
    sw = mask.class_fraction(SIDEWALK)
    rd = mask.class_fraction(ROAD)
    if sw < min_sidewalk_frac:
        return SupportDecision(False, "insufficient sidewalk", sw, rd)
    if rd < min_road_frac:
        return SupportDecision(False, "insufficient road", sw, rd)
    return SupportDecision(True, None, sw, rd)


_MANIFEST_FIELDS = {
    "image_id",
    "point_map_path",
    "mask_path",
    "camera_height_m",
    "fov_deg",
    "intrinsics",
    "camera_centre",
    "geo",
    "segment_id",
    "reference_width_m",
}


def load_manifest(path) -> list[ImageManifestEntry]:
    """Read a manifest JSON array; relative paths resolve against its parent."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise IngestError(f"{path}: file not found")
    except json.JSONDecodeError as exc:
        raise IngestError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
    if not isinstance(raw, list):
        raise IngestError(f"{path}: manifest must be a JSON array")
    entries = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise IngestError(f"{path}: entry {i} is not an object")
        missing = {"image_id", "point_map_path", "mask_path"} - set(item)
        if missing:
            raise IngestError(f"{path}: entry {i} missing fields {sorted(missing)}")
        kwargs = {k: v for k, v in item.items() if k in _MANIFEST_FIELDS}
        for key in ("intrinsics", "camera_centre", "geo"):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(float(x) for x in kwargs[key])
        entry = ImageManifestEntry(**kwargs)
        for attr in ("point_map_path", "mask_path"):
            p = Path(getattr(entry, attr))
            if not p.is_absolute():
                setattr(entry, attr, str(path.parent / p))
        entries.append(entry)
    return entries


def save_manifest(path, entries: list[ImageManifestEntry], relative_to=None) -> None:
    rows = []
    for e in entries:
        row = {"image_id": e.image_id}
        for attr in ("point_map_path", "mask_path"):
            p = Path(getattr(e, attr))
            if relative_to is not None:
                try:
                    p = p.relative_to(relative_to)
                except ValueError:
                    pass
            row[attr] = str(p)
        for attr in (
            "camera_height_m",
            "fov_deg",
            "intrinsics",
            "camera_centre",
            "geo",
            "segment_id",
            "reference_width_m",
        ):
            value = getattr(e, attr)
            if value is not None:
                row[attr] = list(value) if isinstance(value, tuple) else value
        rows.append(row)
    Path(path).write_text(json.dumps(rows, indent=2) + "\n")
