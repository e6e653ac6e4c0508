"""Accuracy metrics, ablation variants, camera-height sweep, and the
three-category geometry protocol.

Metrics are computed over accepted measurements only; rejected and failed
images are counted separately in n_rejected.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from sidewidth import pipeline
from sidewidth.config import PipelineConfig


@dataclass
class MetricsReport:
    mae_m: float | None
    rmse_m: float | None
    bias_m: float | None
    frac_025: float | None
    frac_050: float | None
    n_evaluated: int
    n_rejected: int

    @classmethod
    def empty(cls, n_rejected: int = 0) -> "MetricsReport":
        return cls(None, None, None, None, None, 0, n_rejected)


@dataclass
class ProtocolSpec:
    category: int  # 1 | 2 | 3
    calibration: str  # "native" | "camera_height"
    geometry_source: str  # "point_map" | "depth_map"

    def __post_init__(self):
        if self.category not in (1, 2, 3):
            raise ValueError(f"category must be 1, 2, or 3, got {self.category}")
        if self.calibration not in ("native", "camera_height"):
            raise ValueError(f"unknown calibration mode {self.calibration!r}")
        if self.geometry_source not in ("point_map", "depth_map"):
            raise ValueError(f"unknown geometry source {self.geometry_source!r}")
        if self.category == 1 and self.calibration != "native":
            raise ValueError("category 1 uses native calibration")
        if self.category in (2, 3) and self.calibration != "camera_height":
            raise ValueError(f"category {self.category} uses camera-height calibration")
        if self.category == 2 and self.geometry_source != "depth_map":
            raise ValueError("category 2 consumes depth maps")
        if self.category == 3 and self.geometry_source != "point_map":
            raise ValueError("category 3 consumes point maps")

    @classmethod
    def for_category(cls, category: int) -> "ProtocolSpec":
        if category == 1:
            return cls(1, "native", "point_map")
        if category == 2:
            return cls(2, "camera_height", "depth_map")
        return cls(3, "camera_height", "point_map")


def compute_metrics(pairs) -> MetricsReport:
    """MAE, RMSE, bias, and strict within-0.25/0.50 m fractions."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("compute_metrics requires at least one (pred, truth) pair")
    pred = np.array([p for p, _ in pairs], dtype=np.float64)
    truth = np.array([t for _, t in pairs], dtype=np.float64)
    if not (np.isfinite(pred).all() and np.isfinite(truth).all()):
        raise ValueError("non-finite value in metric input")
    delta = pred - truth
    abs_delta = np.abs(delta)
    return MetricsReport(
        mae_m=float(abs_delta.mean()),
        rmse_m=float(np.sqrt(np.mean(delta * delta))),
        bias_m=float(delta.mean()),
        frac_025=float(np.mean(abs_delta < 0.25)),
        frac_050=float(np.mean(abs_delta < 0.50)),
        n_evaluated=len(pairs),
        n_rejected=0,
    )


def reference_widths(entries) -> dict[str, float]:
    refs = {e.image_id: e.reference_width_m for e in entries if e.reference_width_m is not None}
    if not refs:
        raise ValueError("no ground truth: manifest carries no reference widths")
    return refs


def pairs_from_results(records, entries):
    """Join accepted results with reference widths.

    Returns (pairs, n_rejected) where n_rejected counts reference-carrying
    images that did not produce an accepted measurement.
    """
    refs = reference_widths(entries)
    pairs = []
    n_rejected = 0
    for rec in records:
        image_id = rec["image_id"] if isinstance(rec, dict) else rec.image_id
        status = rec["status"] if isinstance(rec, dict) else rec.status
        width = rec["width_m"] if isinstance(rec, dict) else rec.width_m
        if image_id not in refs:
            continue
        if status == "accepted":
            pairs.append((width, refs[image_id]))
        else:
            n_rejected += 1
    return pairs, n_rejected


def _report(records, entries) -> MetricsReport:
    pairs, n_rejected = pairs_from_results(records, entries)
    if not pairs:
        return MetricsReport.empty(n_rejected)
    report = compute_metrics(pairs)
    report.n_rejected = n_rejected
    return report


def run_ablation(entries, variant: str, cfg: PipelineConfig,
                 workers: int | None = None) -> MetricsReport:
    """Run the pipeline under one ablation variant and score it."""
    results = pipeline.run_manifest(entries, cfg, variant=variant, workers=workers)
    return _report([r for r, _ in results], entries)


def sweep_camera_height(entries, heights, cfg: PipelineConfig,
                        workers: int | None = None):
    """Score the pipeline at each assumed camera height.

    Geometry is measured once at the configured prior and widths rescale
    linearly per height (scale enters multiplicatively only), so per-image
    width(h) equals width(base) * (h / base) exactly.
    """
    heights = list(heights)
    if not heights:
        return []
    base = cfg.h_cam_m
    results = pipeline.run_manifest(entries, cfg, h_cam_force=base, workers=workers)
    records = [r for r, _ in results]
    out = []
    for h in heights:
        factor = h / base
        scaled = []
        for rec in records:
            width = rec.width_m * factor if rec.width_m is not None else None
            scaled.append(pipeline.ImageResult(
                image_id=rec.image_id, status=rec.status, width_m=width,
                n_valid_columns=rec.n_valid_columns, scale=rec.scale,
                plane_normal=rec.plane_normal, plane_offset=rec.plane_offset,
                reason=rec.reason))
        out.append((float(h), _report(scaled, entries)))
    return out


def _peek_tensor_channels(path) -> int:
    arr = np.load(path, mmap_mode="r", allow_pickle=False)
    if arr.ndim != 3:
        raise ValueError(f"{path}: wrong geometry kind: rank {arr.ndim} tensor")
    return int(arr.shape[2])


def run_protocol(entries, protocol: ProtocolSpec, cfg: PipelineConfig,
                 workers: int | None = None) -> MetricsReport:
    """Score one evaluation category; only geometry source and calibration
    differ, the downstream measurement pipeline is shared."""
    if entries:
        channels = _peek_tensor_channels(entries[0].point_map_path)
        expected = 3 if protocol.geometry_source == "point_map" else 1
        if channels != expected:
            raise ValueError(
                f"wrong geometry kind: {entries[0].point_map_path} has {channels} "
                f"channel(s), expected {expected} for {protocol.geometry_source}"
            )
    results = pipeline.run_manifest(
        entries, cfg, geometry_source=protocol.geometry_source,
        calibration_mode=protocol.calibration, workers=workers)
    return _report([r for r, _ in results], entries)


CSV_HEADER = ["variant", "n", "mae_m", "rmse_m", "bias_m", "frac_025", "frac_050", "n_rejected"]


def write_metrics_csv(path, rows) -> None:
    """Rows: iterable of (label, MetricsReport)."""

    def fmt(value):
        return "" if value is None else repr(value)

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for label, report in rows:
            writer.writerow([
                label, report.n_evaluated, fmt(report.mae_m), fmt(report.rmse_m),
                fmt(report.bias_m), fmt(report.frac_025), fmt(report.frac_050),
                report.n_rejected,
            ])


def read_metrics_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def format_metrics_table(rows) -> str:
    """Human-readable fixed-width table for (label, MetricsReport) rows."""
    lines = [f"{'variant':<18} {'n':>5} {'mae_m':>8} {'rmse_m':>8} {'bias_m':>8} "
             f"{'<0.25m':>7} {'<0.50m':>7} {'rej':>5}"]
    for label, r in rows:
        def cell(v, spec="8.3f"):
            return f"{v:{spec}}" if v is not None else " " * int(spec.split(".")[0])

        lines.append(
            f"{label:<18} {r.n_evaluated:>5} {cell(r.mae_m)} {cell(r.rmse_m)} "
            f"{cell(r.bias_m)} {cell(r.frac_025, '7.3f')} {cell(r.frac_050, '7.3f')} "
            f"{r.n_rejected:>5}"
        )
    return "\n".join(lines)


def write_mae_bar_svg(path, rows, ref_mae: float | None = None,
                      title: str = "MAE by variant") -> None:
    """Minimal deterministic SVG bar chart of MAE values, with an optional
    dashed reference line."""
    rows = [(label, mae) for label, mae in rows if mae is not None]
    width, height = 640, 360
    margin_l, margin_r, margin_t, margin_b = 60, 20, 40, 70
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b
    max_val = max([mae for _, mae in rows] + ([ref_mae] if ref_mae is not None else [0.0]) + [1e-9])
    scale = plot_h / (max_val * 1.15)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-size="16" '
        f'font-family="sans-serif">{title}</text>',
        f'<line x1="{margin_l}" y1="{margin_t + plot_h}" x2="{width - margin_r}" '
        f'y2="{margin_t + plot_h}" stroke="black"/>',
        f'<line x1="{margin_l}" y1="{margin_t}" x2="{margin_l}" '
        f'y2="{margin_t + plot_h}" stroke="black"/>',
        f'<text x="16" y="{margin_t + plot_h / 2:.1f}" font-size="12" font-family="sans-serif" '
        f'transform="rotate(-90 16 {margin_t + plot_h / 2:.1f})" text-anchor="middle">MAE (m)</text>',
    ]
    n = max(len(rows), 1)
    slot = plot_w / n
    bar_w = slot * 0.6
    for i, (label, mae) in enumerate(rows):
        bar_h = mae * scale
        x = margin_l + i * slot + (slot - bar_w) / 2
        y = margin_t + plot_h - bar_h
        parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" '
                     f'height="{bar_h:.2f}" fill="#4878a8"/>')
        parts.append(f'<text x="{x + bar_w / 2:.2f}" y="{y - 4:.2f}" text-anchor="middle" '
                     f'font-size="11" font-family="sans-serif">{mae:.3f}</text>')
        lx = margin_l + i * slot + slot / 2
        ly = margin_t + plot_h + 14
        parts.append(f'<text x="{lx:.2f}" y="{ly:.2f}" text-anchor="end" font-size="11" '
                     f'font-family="sans-serif" transform="rotate(-30 {lx:.2f} {ly:.2f})">{label}</text>')
    if ref_mae is not None:
        ry = margin_t + plot_h - ref_mae * scale
        parts.append(f'<line x1="{margin_l}" y1="{ry:.2f}" x2="{width - margin_r}" y2="{ry:.2f}" '
                     f'stroke="#c03030" stroke-dasharray="6,4"/>')
        parts.append(f'<text x="{width - margin_r}" y="{ry - 4:.2f}" text-anchor="end" '
                     f'font-size="11" font-family="sans-serif" fill="#c03030">ref {ref_mae:.3f}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
