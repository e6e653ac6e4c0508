"""Feed-forward dense reconstruction backbone (point maps / depth)."""

from __future__ import annotations

import numpy as np

from svadapters.registry import BackboneUnavailable

INSTALL_HINT = (
    "the vggt package is not installed. Install it with "
    "`pip install vggt` (or from its source repository) and download the "
    "model checkpoint per its documentation, then re-run. Point maps export "
    "with shape (H, W, 3); depth with (H, W, 1)."
)


class VggtBackbone:
    def __init__(self):
        try:
            import torch
            from vggt.models.vggt import VGGT  # type: ignore

            self._torch = torch
            self._model = VGGT.from_pretrained("facebook/VGGT-1B").eval()
        except Exception as exc:
            raise BackboneUnavailable(INSTALL_HINT) from exc

    def run(self, image: np.ndarray, mode: str, camera: dict) -> np.ndarray:
        torch = self._torch
        with torch.no_grad():
            tensor = torch.from_numpy(image).permute(2, 0, 1).float()[None] / 255.0
            predictions = self._model(tensor)
            points = predictions["world_points"][0, 0].cpu().numpy().astype(np.float32)
        if mode == "point_map":
            return points
        if mode == "depth":
            return points[:, :, 2]
        raise ValueError(f"unsupported mode {mode!r}")
