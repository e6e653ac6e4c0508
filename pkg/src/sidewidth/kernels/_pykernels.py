"""NumPy fallback for the compiled kernels.

Elementwise expressions are written in the same evaluation order as the C
loops so both backends agree to the last bit on distances and inlier counts
(the extension is compiled with FP contraction disabled).
"""

import numpy as np


def plane_distances(pts: np.ndarray, nx: float, ny: float, nz: float, d: float) -> np.ndarray:
    """Absolute point-to-plane distances |n.x + d| for a unit normal n."""
    return np.abs(((pts[:, 0] * nx + pts[:, 1] * ny) + pts[:, 2] * nz) + d)


def score_plane(pts: np.ndarray, nx: float, ny: float, nz: float, d: float, tau: float):
    """Count points within tau of the plane and their summed squared distance.

    Returns (inlier_count, sum_of_squared_inlier_distances).
    """
    dist = plane_distances(pts, nx, ny, nz, d)
    sel = dist <= tau
    inl = dist[sel]
    return int(sel.sum()), float(np.dot(inl, inl))


def inlier_mask(pts: np.ndarray, nx: float, ny: float, nz: float, d: float, tau: float) -> np.ndarray:
    """Boolean mask of points within tau of the plane."""
    return plane_distances(pts, nx, ny, nz, d) <= tau
