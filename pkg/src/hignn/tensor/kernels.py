"""Kernel selection: compiled extension when importable, numpy otherwise.

Set HIGNN_KERNELS=python to force the numpy versions.
"""

import logging
import os

import numpy as np

from . import _kernels_py

logger = logging.getLogger(__name__)

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("HIGNN_KERNELS", "").lower() != "python":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        logger.debug("compiled kernels unavailable; using numpy fallback")


def _prep(src, index):
    return (np.ascontiguousarray(src, dtype=np.float64),
            np.ascontiguousarray(index, dtype=np.int64))


def scatter_add_rows(src, index, n):
    """out[index[k]] += src[k] for every row k, in row order."""
    src, index = _prep(src, index)
    return _impl.scatter_add_rows(src, index, int(n))


def segment_max_rows(src, index, n):
    """Per-segment column max and the first row attaining it.

    Empty segments give 0 with argmax -1.
    """
    src, index = _prep(src, index)
    return _impl.segment_max_rows(src, index, int(n))
