"""Hot numeric kernels with two interchangeable backends.

The numba backend JIT-compiles explicit loops; the numpy backend mirrors the
same arithmetic with vectorized slices, accumulating in the same order, so the
two produce bit-identical float64 results (verified in the test suite and
compared for speed by benchmarks/kernel_bench.py).

Backend selection happens once at import time:

    OVDKIT_NUMBA=0   force the pure-numpy backend
    (numba missing)  silent fallback to numpy

``BACKEND`` records which one is active.
"""

import os


def _numba_enabled() -> bool:
    flag = os.environ.get("OVDKIT_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


if _numba_enabled():
    from . import numba_impl as _backend

    BACKEND = "numba"
else:
    from . import numpy_impl as _backend

    BACKEND = "numpy"

conv3x3 = _backend.conv3x3
resize_bilinear = _backend.resize_bilinear
roi_align_grid = _backend.roi_align_grid
