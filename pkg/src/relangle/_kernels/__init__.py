"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time. Set ``RELANGLE_DISABLE_NUMBA=1``
to force the numpy implementations (useful for debugging, profiling and
platforms without numba). Both backends implement identical algorithms, so
results agree up to floating point summation order.
"""

import importlib
import logging
import os

from . import numpy_impl

logger = logging.getLogger(__name__)

_FALSY = {"", "0", "false", "no", "off"}


def _numba_requested():
    return os.environ.get("RELANGLE_DISABLE_NUMBA", "0").strip().lower() in _FALSY


numba_impl = None
if _numba_requested():
    try:
        numba_impl = importlib.import_module(".numba_impl", __name__)
    except ImportError:  # pragma: no cover - numba is a hard dependency in CI
        logger.warning("numba unavailable, falling back to numpy kernels")
        numba_impl = None

BACKEND = "numba" if numba_impl is not None else "numpy"
_impl = numba_impl if numba_impl is not None else numpy_impl

kdtree_build = _impl.kdtree_build
kdtree_knn = _impl.kdtree_knn
sym3_eigh = _impl.sym3_eigh
neighborhood_covariances = _impl.neighborhood_covariances
farthest_point_sample = _impl.farthest_point_sample

__all__ = [
    "BACKEND",
    "kdtree_build",
    "kdtree_knn",
    "sym3_eigh",
    "neighborhood_covariances",
    "farthest_point_sample",
    "numpy_impl",
    "numba_impl",
]
