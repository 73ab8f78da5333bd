"""Pure numpy versions of the row scatter kernels."""

import numpy as np


def _check(index, n):
    if len(index) and (index.min() < 0 or index.max() >= n):
        raise IndexError(f"segment index out of range for {n} segments")


def scatter_add_rows(src, index, n):
    _check(index, n)
    out = np.zeros((n, src.shape[1]))
    # np.add.at is unbuffered and applies rows in order
    np.add.at(out, index, src)
    return out


def segment_max_rows(src, index, n):
    _check(index, n)
    cols = src.shape[1]
    out = np.full((n, cols), -np.inf)
    np.maximum.at(out, index, src)
    rows = np.arange(len(index))
    hit = src == out[index]
    arg = np.full((n, cols), len(index), dtype=np.int64)
    r, c = np.nonzero(hit)
    np.minimum.at(arg, (index[r], c), rows[r])
    empty = arg == len(index)
    out[empty] = 0.0
    arg[empty] = -1
    return out, arg
