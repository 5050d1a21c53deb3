"""Pure-numpy fallback for :mod:`persistplan._kernels`.

Semantics match the compiled kernels exactly: a score ``s`` lands in bin
``#{thresholds < s}``, exact ties with ``thresholds[k]`` are counted in
``equal[k]`` and ``binmax[k]`` keeps the largest non-tied score of bin ``k``.
"""

import numpy as np


def _accumulate(values, thresholds, hist, equal, binmax):
    T = thresholds.shape[0]
    k = np.searchsorted(thresholds, values, side="left")
    hist += np.bincount(k, minlength=T + 1).astype(np.int64)
    inside = k < T
    tie = np.zeros(values.shape, dtype=bool)
    tie[inside] = thresholds[k[inside]] == values[inside]
    equal += np.bincount(k[tie], minlength=T).astype(np.int64)
    np.maximum.at(binmax, k[~tie], values[~tie])


def _check(thresholds, hist, equal, binmax):
    T = thresholds.shape[0]
    if hist.shape[0] != T + 1 or equal.shape[0] != T or binmax.shape[0] != T + 1:
        raise ValueError("hist and binmax need len(thresholds) + 1 entries, equal len(thresholds)")
    if T == 0:
        raise ValueError("at least one threshold is required")


def bin_block(block, row_offset, thresholds, hist, equal, binmax, skip_diagonal):
    _check(thresholds, hist, equal, binmax)
    block = np.asarray(block)
    if skip_diagonal:
        m, n = block.shape
        mask = np.ones(block.shape, dtype=bool)
        rows = np.arange(m)
        cols = rows + row_offset
        ok = cols < n
        mask[rows[ok], cols[ok]] = False
        values = block[mask]
    else:
        values = block.ravel()
    _accumulate(values, thresholds, hist, equal, binmax)


def bin_values(values, thresholds, hist, equal, binmax):
    _check(thresholds, hist, equal, binmax)
    _accumulate(np.asarray(values), thresholds, hist, equal, binmax)


def rowwise_dot(a, b, ia, ib):
    # sequential left-to-right sum, same as the compiled kernel
    a_rows = a[ia]
    b_rows = b[ib]
    out = np.zeros(ia.shape[0], dtype=np.float64)
    for j in range(a.shape[1]):
        out = out + a_rows[:, j] * b_rows[:, j]
    return out
