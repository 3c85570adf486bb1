"""1-D k-means kernels.

The compiled ``_fast`` extension is used when it was built; otherwise the
pure-Python ``_pure`` module is used. Setting ``OFFLOAD_RL_PURE=1`` forces
the fallback. ``BACKEND`` names the active implementation.
"""

import os

from . import _pure

if os.environ.get("OFFLOAD_RL_PURE", "") not in ("", "0"):
    _impl = _pure
else:
    try:
        from . import _fast as _impl
    except ImportError:
        _impl = _pure

BACKEND = "compiled" if _impl is not _pure else "python"

lloyd_1d = _impl.lloyd_1d
dp_kmeans_1d = _impl.dp_kmeans_1d

__all__ = ["BACKEND", "lloyd_1d", "dp_kmeans_1d"]
