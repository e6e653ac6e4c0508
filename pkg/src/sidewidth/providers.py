"""Imagery provider clients.

The local-directory provider is the canonical implementation used in tests;
the URL template provider only renders provider request URLs (no credentials,
no download) so an operator can drive acquisition themselves.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import urlencode


@dataclass
class ImageRequest:
    point_id: str
    lon: float
    lat: float
    heading_deg: float
    pitch_deg: float = 0.0
    size_px: int = 640
    fov_deg: float = 90.0


class UrlTemplateProvider:
    """Renders request URLs for an HTTP street-view endpoint."""

    def __init__(self, base_url: str):
        self.base_url = base_url.rstrip("?")

    def request_url(self, req: ImageRequest) -> str:
        params = [
            ("size", f"{req.size_px}x{req.size_px}"),
            ("location", f"{req.lat:.7f},{req.lon:.7f}"),
            ("heading", f"{req.heading_deg:.1f}"),
            ("pitch", f"{req.pitch_deg:.1f}"),
            ("fov", f"{req.fov_deg:.1f}"),
        ]
        return f"{self.base_url}?{urlencode(params)}"


class LocalDirectoryProvider:
    """Resolves requests against pre-downloaded files named
    ``{point_id}_h{heading:03d}.jpg`` (also .png)."""

    def __init__(self, root):
        self.root = Path(root)

    def filename(self, req: ImageRequest) -> str:
        return f"{req.point_id}_h{round(req.heading_deg) % 360:03d}"

    def resolve(self, req: ImageRequest) -> Path | None:
        stem = self.filename(req)
        for ext in (".jpg", ".jpeg", ".png"):
            candidate = self.root / (stem + ext)
            if candidate.exists():
                return candidate
        return None

    def fetch_many(self, requests, workers: int = 4) -> list[Path | None]:
        """Resolve many requests with bounded parallelism, preserving order."""
        if workers <= 1:
            return [self.resolve(r) for r in requests]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self.resolve, requests))
