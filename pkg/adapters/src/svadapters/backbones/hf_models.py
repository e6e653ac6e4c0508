"""Hugging Face backed backbones. Weights are never vendored: construction
fails fast with download instructions when the model is not cached locally."""

from __future__ import annotations

import numpy as np

from svadapters.registry import BackboneUnavailable

SEGFORMER_ID = "nvidia/segformer-b5-finetuned-cityscapes-1024-1024"
DEPTH_ANYTHING_ID = "depth-anything/Depth-Anything-V2-Base-hf"


def _instructions(model_id: str, extra: str) -> str:
    return (f"backbone weights for {model_id} are not available locally. "
            f"Install dependencies with `pip install {extra}` and pre-download the "
            f"checkpoint on a machine with network access, e.g. "
            f"`huggingface-cli download {model_id}`, then re-run.")


class SegformerB5:
    """Cityscapes segmentation; emits train ids (road=0, sidewalk=1)."""

    def __init__(self):
        try:
            import torch
            from transformers import (AutoImageProcessor,
                                      SegformerForSemanticSegmentation)

            self._torch = torch
            self._processor = AutoImageProcessor.from_pretrained(
                SEGFORMER_ID, local_files_only=True)
            self._model = SegformerForSemanticSegmentation.from_pretrained(
                SEGFORMER_ID, local_files_only=True).eval()
        except Exception as exc:
            raise BackboneUnavailable(_instructions(SEGFORMER_ID, "torch transformers")) from exc

    def run(self, image: np.ndarray, mode: str, camera: dict) -> np.ndarray:
        if mode != "mask":
            raise ValueError("segformer-b5 only exports masks")
        torch = self._torch
        with torch.no_grad():
            inputs = self._processor(images=image, return_tensors="pt")
            logits = self._model(**inputs).logits
            upsampled = torch.nn.functional.interpolate(
                logits, size=image.shape[:2], mode="bilinear", align_corners=False)
            return upsampled.argmax(dim=1)[0].cpu().numpy().astype(np.uint8)


class DepthAnythingV2:
    """Monocular depth; emits a (H, W) float32 depth raster."""

    def __init__(self):
        try:
            import torch
            from transformers import AutoImageProcessor, AutoModelForDepthEstimation

            self._torch = torch
            self._processor = AutoImageProcessor.from_pretrained(
                DEPTH_ANYTHING_ID, local_files_only=True)
            self._model = AutoModelForDepthEstimation.from_pretrained(
                DEPTH_ANYTHING_ID, local_files_only=True).eval()
        except Exception as exc:
            raise BackboneUnavailable(_instructions(DEPTH_ANYTHING_ID, "torch transformers")) from exc

    def run(self, image: np.ndarray, mode: str, camera: dict) -> np.ndarray:
        if mode != "depth":
            raise ValueError("depth-anything-v2 only exports depth")
        torch = self._torch
        with torch.no_grad():
            inputs = self._processor(images=image, return_tensors="pt")
            predicted = self._model(**inputs).predicted_depth
            resized = torch.nn.functional.interpolate(
                predicted.unsqueeze(1), size=image.shape[:2], mode="bicubic",
                align_corners=False)
            return resized[0, 0].cpu().numpy().astype(np.float32)
