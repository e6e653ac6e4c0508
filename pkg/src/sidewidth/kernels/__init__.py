"""Hot numeric kernels for plane fitting.

Two interchangeable backends: a compiled Cython extension and a pure-NumPy
fallback. The extension is preferred when importable; set the environment
variable ``SIDEWIDTH_PURE_PYTHON=1`` to force the fallback.
"""

import os

from sidewidth.kernels import _pykernels

if os.environ.get("SIDEWIDTH_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    HAVE_EXTENSION = False
else:
    try:
        from sidewidth.kernels import _ckernels as _impl

        HAVE_EXTENSION = True
    except ImportError:
        _impl = _pykernels
        HAVE_EXTENSION = False

plane_distances = _impl.plane_distances
score_plane = _impl.score_plane
inlier_mask = _impl.inlier_mask


def backend_name() -> str:
    return "compiled" if _impl is not _pykernels else "python"
