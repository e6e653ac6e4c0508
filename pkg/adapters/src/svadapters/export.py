"""Batch exporters: run a backbone over an image directory and write
interchange files plus manifest fragments. Per-file failures are logged and
the batch continues."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from PIL import Image

from svadapters import writers
from svadapters.registry import create_backbone

logger = logging.getLogger("svadapters")

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")


def iter_images(image_dir):
    image_dir = Path(image_dir)
    if not image_dir.is_dir():
        raise NotADirectoryError(f"{image_dir} is not a directory")
    return sorted(p for p in image_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def _camera_fields(camera_height_m: float, fov_deg: float) -> dict:
    return {"camera_height_m": camera_height_m, "fov_deg": fov_deg}


def export_batch(image_dir, out_dir, backbone_name: str, mode: str,
                 camera_height_m: float = 2.5, fov_deg: float = 90.0):
    """Export one mode for every readable image; returns (n_ok, n_failed)."""
    backbone = create_backbone(backbone_name, mode)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    camera = _camera_fields(camera_height_m, fov_deg)

    n_ok = n_failed = 0
    for path in iter_images(image_dir):
        image_id = path.stem
        try:
            image = np.asarray(Image.open(path).convert("RGB"))
            output = backbone.run(image, mode, camera)
            fields = dict(camera, backbone=backbone_name, mode=mode)
            if mode == "mask":
                out_path = out_dir / f"{image_id}_mask.png"
                writers.write_mask(out_path, output)
                fields["mask_path"] = out_path.name
            elif mode == "depth":
                out_path = out_dir / f"{image_id}_depth.npy"
                writers.write_depth(out_path, output)
                fields["point_map_path"] = out_path.name
            else:
                out_path = out_dir / f"{image_id}.npy"
                writers.write_point_map(out_path, output)
                fields["point_map_path"] = out_path.name
            writers.update_fragments(out_dir, image_id, fields)
            n_ok += 1
        except Exception as exc:
            n_failed += 1
            logger.warning("skipping %s: %s", path.name, exc)
    logger.info("%s/%s: exported %d, skipped %d", backbone_name, mode, n_ok, n_failed)
    return n_ok, n_failed


def export_segmentation(image_dir, out_dir, backbone_name: str = "demo", **camera):
    """Masks for every image in the directory."""
    return export_batch(image_dir, out_dir, backbone_name, "mask", **camera)


def export_geometry(image_dir, backbone_name: str, out_dir, mode: str = "point_map",
                    **camera):
    """Point maps or depth tensors for every image in the directory."""
    if mode not in ("point_map", "depth"):
        raise ValueError(f"geometry mode must be point_map or depth, got {mode!r}")
    return export_batch(image_dir, out_dir, backbone_name, mode, **camera)
