"""Robust ground-plane estimation from road/sidewalk 3D points.

Stages: coarse least-variance fit through the centroid, dispersion estimate
via the median absolute deviation, an adaptively clipped RANSAC inlier
threshold, seeded RANSAC over minimal 3-point samples, and a final refit on
the consensus set.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from sidewidth import kernels

_ORIGIN = np.zeros(3)


class PlaneFitError(ValueError):
    """Degenerate or insufficient geometry for a plane fit."""


@dataclass
class GroundPlane:
    """Plane n.x + d = 0 with a unit normal, plus fit diagnostics."""

    normal: np.ndarray
    offset: float
    inlier_count: int | None = None
    inlier_ratio: float | None = None
    threshold_used: float | None = None

    def signed_distance(self, point) -> float:
        return float(np.dot(self.normal, np.asarray(point, dtype=np.float64)) + self.offset)


@dataclass
class RansacConfig:
    iterations: int = 500
    seed: int = 0
    mad_multiplier: float = 2.5
    mad_consistency: float = 1.4826
    clip_lo: float = 0.005
    clip_hi: float = 0.05
    min_support: int = 50
    min_inlier_ratio: float = 0.3
    # Candidate scoring runs on at most this many points (seeded subsample);
    # the consensus set and refit always use the full point set. None disables.
    max_score_points: int | None = 30_000

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.clip_lo > self.clip_hi:
            raise ValueError("clip_lo must not exceed clip_hi")


def derive_seed(global_seed: int, image_id: str) -> np.random.SeedSequence:
    """Stable per-image seed from the global seed and the image id."""
    digest = hashlib.sha256(image_id.encode("utf-8")).digest()
    return np.random.SeedSequence([global_seed, int.from_bytes(digest[:8], "little")])


def _as_points(points) -> np.ndarray:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise PlaneFitError(f"points must be (N, 3), got {pts.shape}")
    return pts


def fit_plane_svd(points, reference_centre=None) -> GroundPlane:
    """Least-variance plane through the centroid via SVD of the scatter matrix.

    The normal is oriented so the reference centre (origin by default) lies on
    the non-negative side: n.c + d >= 0.
    """
    pts = _as_points(points)
    if pts.shape[0] < 3:
        raise PlaneFitError(f"fewer than 3 points ({pts.shape[0]})")
    centroid = pts.mean(axis=0)
    centred = pts - centroid
    cov = centred.T @ centred
    _, svals, vt = np.linalg.svd(cov)
    if svals[1] <= svals[0] * 1e-12:
        raise PlaneFitError("degenerate point set (collinear or coincident)")
    normal = vt[2]
    offset = -float(np.dot(normal, centroid))
    ref = _ORIGIN if reference_centre is None else np.asarray(reference_centre, dtype=np.float64)
    if np.dot(normal, ref) + offset < 0.0:
        normal = -normal
        offset = -offset
    return GroundPlane(normal=normal, offset=offset)


def point_plane_distances(points, plane: GroundPlane) -> np.ndarray:
    """Absolute distances |n.x + d| (unit normal assumed)."""
    pts = _as_points(points)
    n = plane.normal
    return kernels.plane_distances(pts, n[0], n[1], n[2], plane.offset)


def mad(values) -> float:
    """Median absolute deviation; even-length medians average the middle two."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.size == 0:
        raise ValueError("mad of empty input")
    return float(np.median(np.abs(vals - np.median(vals))))


def adaptive_threshold(mad_value: float, config: RansacConfig) -> float:
    """Clipped inlier threshold: clip(multiplier * consistency * MAD, lo, hi)."""
    if mad_value < 0:
        raise ValueError("mad_value must be non-negative")
    tau = config.mad_multiplier * config.mad_consistency * mad_value
    return float(min(max(tau, config.clip_lo), config.clip_hi))


def _sample_plane(pts: np.ndarray, i: int, j: int, k: int):
    """Plane through three points, or None when the sample is degenerate.

    Scalar arithmetic: this runs once per RANSAC trial and array-object
    overhead would dominate the candidate scoring otherwise.
    """
    p0x, p0y, p0z = pts[i, 0], pts[i, 1], pts[i, 2]
    ax = pts[j, 0] - p0x
    ay = pts[j, 1] - p0y
    az = pts[j, 2] - p0z
    bx = pts[k, 0] - p0x
    by = pts[k, 1] - p0y
    bz = pts[k, 2] - p0z
    nx = ay * bz - az * by
    ny = az * bx - ax * bz
    nz = ax * by - ay * bx
    norm = math.sqrt(nx * nx + ny * ny + nz * nz)
    scale = math.sqrt(ax * ax + ay * ay + az * az) * math.sqrt(bx * bx + by * by + bz * bz)
    if norm <= 1e-12 * max(scale, 1e-300):
        return None
    nx, ny, nz = nx / norm, ny / norm, nz / norm
    return nx, ny, nz, -(nx * p0x + ny * p0y + nz * p0z)


def ransac_plane(points, tau: float, config: RansacConfig, rng: np.random.Generator | None = None):
    """Seeded RANSAC over minimal samples; returns (plane, inlier_indices).

    The best candidate maximizes inlier count; ties prefer lower RMS inlier
    distance, then the earlier trial. Degenerate samples do not consume the
    trial budget beyond a 10x attempt cap.
    """
    pts = _as_points(points)
    n_pts = pts.shape[0]
    if n_pts < 3:
        raise PlaneFitError(f"fewer than 3 points ({n_pts})")
    if tau <= 0:
        raise ValueError("tau must be positive")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed))

    cap = config.iterations * 10
    samples = rng.integers(0, n_pts, size=(cap, 3))

    score_pts = pts
    if config.max_score_points is not None and n_pts > config.max_score_points:
        score_idx = rng.choice(n_pts, size=config.max_score_points, replace=False)
        score_pts = np.ascontiguousarray(pts[score_idx])

    best = None  # (count, ssq, trial, nx, ny, nz, offset)
    trials = 0
    sample_list = samples.tolist()
    for attempt in range(cap):
        if trials >= config.iterations:
            break
        i, j, k = sample_list[attempt]
        if i == j or j == k or i == k:
            continue
        cand = _sample_plane(pts, i, j, k)
        if cand is None:
            continue
        nx, ny, nz, offset = cand
        trials += 1
        count, ssq = kernels.score_plane(score_pts, nx, ny, nz, offset, tau)
        if count == 0:
            continue
        if best is None or count > best[0] or (count == best[0] and ssq < best[1]):
            best = (count, ssq, trials, nx, ny, nz, offset)

    if best is None:
        if trials == 0:
            raise PlaneFitError("no non-degenerate sample found within attempt cap")
        raise PlaneFitError("no candidate plane had any inliers")

    _, _, _, nx, ny, nz, offset = best
    mask = kernels.inlier_mask(pts, nx, ny, nz, offset, tau)
    plane = GroundPlane(normal=np.array([nx, ny, nz]), offset=offset)
    return plane, np.flatnonzero(mask)


def fit_ground_plane(points, config: RansacConfig | None = None, reference_centre=None,
                     rng: np.random.Generator | None = None) -> GroundPlane:
    """Full pipeline: coarse fit, MAD threshold, RANSAC, refit on inliers."""
    config = RansacConfig() if config is None else config
    pts = _as_points(points)
    if pts.shape[0] < config.min_support:
        raise PlaneFitError(
            f"too few support points ({pts.shape[0]} < {config.min_support})"
        )
    coarse = fit_plane_svd(pts, reference_centre)
    dists = point_plane_distances(pts, coarse)
    tau = adaptive_threshold(mad(dists), config)
    _, inlier_idx = ransac_plane(pts, tau, config, rng=rng)
    refined = fit_plane_svd(pts[inlier_idx], reference_centre)
    refined.inlier_count = int(inlier_idx.size)
    refined.inlier_ratio = float(inlier_idx.size) / pts.shape[0]
    refined.threshold_used = tau
    return refined
