"""Shared writers for the measurement pipeline's interchange formats.

This package never imports the measurement pipeline; the file formats are
the only boundary. Geometry tensors are float32 ``.npy`` (point map
(H, W, 3), depth (H, W, 1)); masks are 8-bit single-channel PNG; the
manifest is a JSON array whose entries need both a geometry path and a mask
path. Exports record partial per-image data in ``fragments.json`` and only
complete entries are published to ``manifest.json``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

FRAGMENTS_NAME = "fragments.json"
MANIFEST_NAME = "manifest.json"


def write_point_map(path, points: np.ndarray) -> None:
    points = np.ascontiguousarray(points, dtype=np.float32)
    if points.ndim != 3 or points.shape[2] != 3:
        raise ValueError(f"point map must be (H, W, 3), got {points.shape}")
    np.save(path, points)


def write_depth(path, depth: np.ndarray) -> None:
    depth = np.ascontiguousarray(depth, dtype=np.float32)
    if depth.ndim == 2:
        depth = depth[:, :, None]
    if depth.ndim != 3 or depth.shape[2] != 1:
        raise ValueError(f"depth must be (H, W) or (H, W, 1), got {depth.shape}")
    np.save(path, depth)


def write_mask(path, raw_ids: np.ndarray) -> None:
    raw_ids = np.asarray(raw_ids)
    if raw_ids.ndim != 2:
        raise ValueError(f"mask must be (H, W), got {raw_ids.shape}")
    Image.fromarray(raw_ids.astype(np.uint8), mode="L").save(path, format="PNG")


def load_fragments(out_dir) -> dict:
    path = Path(out_dir) / FRAGMENTS_NAME
    if path.exists():
        return json.loads(path.read_text())
    return {}


def update_fragments(out_dir, image_id: str, fields: dict) -> None:
    """Merge per-image fields and republish the manifest of complete entries."""
    out_dir = Path(out_dir)
    fragments = load_fragments(out_dir)
    entry = fragments.setdefault(image_id, {"image_id": image_id})
    entry.update(fields)
    (out_dir / FRAGMENTS_NAME).write_text(json.dumps(fragments, indent=2, sort_keys=True) + "\n")

    complete = [fragments[key] for key in sorted(fragments)
                if "point_map_path" in fragments[key] and "mask_path" in fragments[key]]
    (out_dir / MANIFEST_NAME).write_text(json.dumps(complete, indent=2) + "\n")
