"""Hot-kernel backend selection.

The compiled Cython extension is preferred when it imported cleanly; the
numpy implementation is the fallback and the behavioral reference. Set
``LOOMKIT_PURE_PYTHON=1`` to force the fallback (used by the benchmark and
the parity tests).
"""

import os

from . import _numpy_impl

if os.environ.get("LOOMKIT_PURE_PYTHON"):
    _impl = _numpy_impl
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _numpy_impl

BACKEND = _impl.BACKEND_NAME

mask_overlap = _impl.mask_overlap
boundary_map = _impl.boundary_map
boundary_match_counts = _impl.boundary_match_counts
kts_scatter_table = _impl.kts_scatter_table
kts_dp = _impl.kts_dp

__all__ = [
    "BACKEND",
    "mask_overlap",
    "boundary_map",
    "boundary_match_counts",
    "kts_scatter_table",
    "kts_dp",
]
