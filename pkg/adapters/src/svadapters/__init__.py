"""Backbone output exporters for the sidewidth interchange formats."""

__version__ = "0.1.0"

from svadapters.export import export_geometry, export_segmentation
from svadapters.registry import BackboneUnavailable, available_backbones, create_backbone

__all__ = [
    "BackboneUnavailable",
    "available_backbones",
    "create_backbone",
    "export_geometry",
    "export_segmentation",
]
