"""Backbone registry: model choice by name, one exporter surface."""

from __future__ import annotations

from dataclasses import dataclass

MODES = ("point_map", "depth", "mask")


class BackboneUnavailable(RuntimeError):
    """The named backbone cannot run here (missing package or weights)."""


@dataclass
class BackboneInfo:
    name: str
    modes: tuple[str, ...]
    factory: object  # () -> backbone with run(image, mode, camera)
    note: str


_REGISTRY: dict[str, BackboneInfo] = {}


def register(name: str, modes, factory, note: str = "") -> None:
    _REGISTRY[name] = BackboneInfo(name=name, modes=tuple(modes), factory=factory, note=note)


def available_backbones() -> dict[str, tuple[str, ...]]:
    return {name: info.modes for name, info in sorted(_REGISTRY.items())}


def create_backbone(name: str, mode: str):
    if name not in _REGISTRY:
        names = ", ".join(sorted(_REGISTRY))
        raise KeyError(f"unknown backbone {name!r}; supported: {names}")
    info = _REGISTRY[name]
    if mode not in info.modes:
        raise ValueError(f"backbone {name!r} does not support mode {mode!r} "
                         f"(supports: {', '.join(info.modes)})")
    return info.factory()


def _register_builtins():
    from svadapters.backbones import demo, hf_models, vggt

    register("demo", MODES, demo.DemoBackbone,
             "deterministic flat-ground heuristic; no weights needed (smoke tests)")
    register("segformer-b5", ("mask",), hf_models.SegformerB5,
             "Cityscapes semantic segmentation via transformers")
    register("depth-anything-v2", ("depth",), hf_models.DepthAnythingV2,
             "monocular depth via transformers")
    register("vggt", ("point_map", "depth"), vggt.VggtBackbone,
             "feed-forward dense 3D reconstruction")


_register_builtins()
