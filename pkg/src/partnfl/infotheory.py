"""Entropy, mutual information, Rand index and NMI.

Scalar functions take :class:`~partnfl.partitions.Partition` or
:class:`~partnfl.partitions.ContingencyTable` values and accumulate with
``math.fsum`` in row-major order.  The ``*_batch`` functions score every row of
a universe array against one fixed partition and are what the expectation and
verification code runs on.  All logarithms are natural.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidPartitionError
from .partitions import ContingencyTable, Partition, block_size_matrix, contingency

NORMALIZATIONS = ("max", "joint", "logn")

_CHUNK_CELLS = 1 << 22


def entropy(p: Partition) -> float:
    n = p.n
    return max(0.0, -math.fsum((a / n) * math.log(a / n) for a in p.block_sizes))


def mutual_information(tbl: ContingencyTable) -> float:
    n = tbl.total
    terms = []
    for a, row in zip(tbl.row_sums, tbl.counts):
        for b, nij in zip(tbl.col_sums, row):
            if nij:
                terms.append((nij / n) * math.log((nij * n) / (a * b)))
    # clamp rounding noise; I is non-negative
    return max(0.0, math.fsum(terms))


def _pairs(x: int) -> int:
    return x * (x - 1) // 2


def rand_index(tbl: ContingencyTable) -> float:
    """Fraction of element pairs on which the two partitions agree."""
    n = tbl.total
    if n < 2:
        raise InvalidPartitionError("the Rand index needs at least two elements")
    together_both = sum(_pairs(x) for row in tbl.counts for x in row)
    together_rows = sum(_pairs(a) for a in tbl.row_sums)
    together_cols = sum(_pairs(b) for b in tbl.col_sums)
    total = _pairs(n)
    agree = total + 2 * together_both - together_rows - together_cols
    return agree / total


def joint_entropy(tbl: ContingencyTable) -> float:
    n = tbl.total
    return max(0.0, -math.fsum(
        (x / n) * math.log(x / n) for row in tbl.counts for x in row if x
    ))


def nmi(c: Partition, t: Partition, normalization: str = "max") -> float:
    """Normalized mutual information.

    ``normalization`` is ``"max"`` (max of the two entropies), ``"joint"``
    (joint entropy) or ``"logn"`` (the constant ``ln n``).  Two 1-partitions
    score 1; otherwise a zero normalizer means ``I == 0`` and the score is 0.
    """
    if c.n != t.n:
        raise InvalidPartitionError(f"partitions differ in size: {c.n} != {t.n}")
    if c.n < 2:
        raise InvalidPartitionError("NMI needs at least two elements")
    if c.is_one_partition and t.is_one_partition:
        return 1.0
    tbl = contingency(c, t)
    mi = mutual_information(tbl)
    if normalization == "max":
        denom = max(entropy(c), entropy(t))
    elif normalization == "joint":
        denom = joint_entropy(tbl)
    elif normalization == "logn":
        denom = math.log(c.n)
    else:
        raise ValueError(f"unknown NMI normalization {normalization!r}")
    if denom == 0.0:
        return 0.0
    return mi / denom


# --------------------------------------------------------------------------
# batch versions over universe arrays


def _as_array(p: Partition) -> np.ndarray:
    return np.asarray(p.assignment, dtype=np.int64)


def _chunks(m: int, cells_per_row: int):
    step = max(1, _CHUNK_CELLS // max(1, cells_per_row))
    for lo in range(0, m, step):
        yield lo, min(m, lo + step)


def contingency_batch(arr: np.ndarray, t: Partition) -> np.ndarray:
    """Counts ``n_ij`` for every row of ``arr`` against ``t``: shape ``(m, n, k_t)``."""
    m, n = arr.shape
    tv = _as_array(t)
    kt = int(tv.max()) + 1
    width = n * kt
    out = np.empty((m, n, kt), dtype=np.int64)
    for lo, hi in _chunks(m, width):
        block = arr[lo:hi].astype(np.int64) * kt + tv
        block += (np.arange(hi - lo, dtype=np.int64) * width)[:, None]
        out[lo:hi] = np.bincount(block.ravel(), minlength=(hi - lo) * width).reshape(
            hi - lo, n, kt
        )
    return out


def _log_table(n: int) -> np.ndarray:
    table = np.zeros(n + 1)
    table[1:] = np.log(np.arange(1, n + 1))
    return table


def entropy_batch(arr: np.ndarray) -> np.ndarray:
    m, n = arr.shape
    sizes = block_size_matrix(arr)
    logs = _log_table(n)
    # -sum (a/n) ln(a/n) = ln n - (1/n) sum a ln a
    h = math.log(n) - (sizes * logs[sizes]).sum(axis=1) / n
    return np.maximum(h, 0.0)


def mi_batch(arr: np.ndarray, t: Partition) -> np.ndarray:
    m, n = arr.shape
    tv = _as_array(t)
    kt = int(tv.max()) + 1
    b = np.bincount(tv, minlength=kt)
    xlogx = np.arange(n + 1) * _log_table(n)
    # n * I = sum n_ij ln n_ij - sum a_i ln a_i - sum b_j ln b_j + n ln n
    const = n * math.log(n) - float(xlogx[b].sum())
    rows = xlogx[block_size_matrix(arr)].sum(axis=1)
    out = np.empty(m)
    for lo, hi in _chunks(m, n * kt):
        nij = contingency_batch(arr[lo:hi], t)
        out[lo:hi] = xlogx[nij].sum(axis=(1, 2))
    out = (out - rows + const) / n
    return np.maximum(out, 0.0)


def ri_batch(arr: np.ndarray, t: Partition) -> np.ndarray:
    m, n = arr.shape
    if n < 2:
        raise InvalidPartitionError("the Rand index needs at least two elements")
    tv = _as_array(t)
    b = np.bincount(tv)
    together_cols = int((b * (b - 1) // 2).sum())
    a = block_size_matrix(arr)
    together_rows = (a * (a - 1) // 2).sum(axis=1)
    together_both = np.empty(m, dtype=np.int64)
    for lo, hi in _chunks(m, n * b.size):
        nij = contingency_batch(arr[lo:hi], t)
        together_both[lo:hi] = (nij * (nij - 1) // 2).sum(axis=(1, 2))
    total = n * (n - 1) // 2
    agree = total + 2 * together_both - together_rows - together_cols
    return agree / total


def nmi_batch(arr: np.ndarray, t: Partition, normalization: str = "max") -> np.ndarray:
    m, n = arr.shape
    if n < 2:
        raise InvalidPartitionError("NMI needs at least two elements")
    mi = mi_batch(arr, t)
    if normalization == "max":
        denom = np.maximum(entropy_batch(arr), entropy(t))
    elif normalization == "joint":
        logs = _log_table(n)
        denom = np.empty(m)
        for lo, hi in _chunks(m, n * n):
            nij = contingency_batch(arr[lo:hi], t)
            denom[lo:hi] = math.log(n) - (nij * logs[nij]).sum(axis=(1, 2)) / n
        denom = np.maximum(denom, 0.0)
    elif normalization == "logn":
        denom = np.full(m, math.log(n))
    else:
        raise ValueError(f"unknown NMI normalization {normalization!r}")
    out = np.divide(mi, denom, out=np.zeros(m), where=denom > 0)
    if t.is_one_partition:
        out[arr.max(axis=1) == 0] = 1.0
    return out
