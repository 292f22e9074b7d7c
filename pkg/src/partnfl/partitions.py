"""Set partitions in restricted-growth form and the exact combinatorics around them.

A partition of ``n`` elements is stored as its restricted growth string (RGS):
``assignment[i]`` is the block of element ``i``, ``assignment[0] == 0`` and each
entry exceeds the running maximum by at most one.  Every grouping has exactly
one RGS, so equality of partitions is equality of tuples.

Whole universes (all partitions of ``n``, a fixed shape, a fixed block count,
the interior) are materialized as read-only ``int8`` arrays of shape
``(count, n)`` in lexicographic RGS order; the vectorized statistics in
:mod:`partnfl.infotheory` consume those arrays directly.
"""

from __future__ import annotations

import bisect
import math
import random
import threading
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Hashable, Iterator, Sequence

import numpy as np

from .errors import (
    EmptyUniverseError,
    InvalidPartitionError,
    LimitExceededError,
)

BELL_LIMIT = 500
DEFAULT_ENUM_LIMIT = 12

FAMILIES = ("all", "perm", "num", "interior")


@dataclass(frozen=True)
class Partition:
    """A set partition in canonical restricted-growth form."""

    n: int
    assignment: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidPartitionError("a partition needs at least one element")
        if len(self.assignment) != self.n:
            raise InvalidPartitionError(
                f"assignment has {len(self.assignment)} entries, expected {self.n}"
            )
        top = -1
        for i, b in enumerate(self.assignment):
            if b < 0 or b > top + 1:
                raise InvalidPartitionError(
                    f"assignment is not a restricted growth string at index {i}"
                )
            top = max(top, b)

    @classmethod
    def from_assignment(cls, assignment: Sequence[int]) -> "Partition":
        a = tuple(int(x) for x in assignment)
        return cls(len(a), a)

    @property
    def num_blocks(self) -> int:
        return max(self.assignment) + 1

    @property
    def block_sizes(self) -> tuple[int, ...]:
        """Sizes indexed by block id (not sorted)."""
        sizes = [0] * self.num_blocks
        for b in self.assignment:
            sizes[b] += 1
        return tuple(sizes)

    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.num_blocks)]
        for i, b in enumerate(self.assignment):
            out[b].append(i)
        return out

    @property
    def is_one_partition(self) -> bool:
        return self.num_blocks == 1

    @property
    def is_n_partition(self) -> bool:
        return self.num_blocks == self.n

    @property
    def is_boundary(self) -> bool:
        return self.is_one_partition or self.is_n_partition

    def __str__(self) -> str:
        return " ".join(map(str, self.assignment))


@dataclass(frozen=True)
class PartitionShape:
    """Multiset of block sizes, kept as a non-increasing tuple."""

    sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.sizes:
            raise InvalidPartitionError("a shape needs at least one block")
        if any(s < 1 for s in self.sizes):
            raise InvalidPartitionError("block sizes must be positive")
        if list(self.sizes) != sorted(self.sizes, reverse=True):
            raise InvalidPartitionError("shape sizes must be non-increasing")

    @classmethod
    def of(cls, sizes: Sequence[int]) -> "PartitionShape":
        """Build a shape from sizes in any order."""
        return cls(tuple(sorted((int(s) for s in sizes), reverse=True)))

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def num_blocks(self) -> int:
        return len(self.sizes)

    def __str__(self) -> str:
        return ",".join(map(str, self.sizes))


@dataclass(frozen=True)
class ContingencyTable:
    """Block-overlap counts; rows are blocks of the first partition."""

    counts: tuple[tuple[int, ...], ...]
    row_sums: tuple[int, ...]
    col_sums: tuple[int, ...]
    total: int


def one_partition(n: int) -> Partition:
    return Partition(n, (0,) * n)


def n_partition(n: int) -> Partition:
    return Partition(n, tuple(range(n)))


def canonicalize(labels: Sequence[Hashable]) -> Partition:
    """Map arbitrary labels to the restricted-growth partition they induce.

    >>> canonicalize(["x", "y", "x"]).assignment
    (0, 1, 0)
    """
    if len(labels) == 0:
        raise InvalidPartitionError("cannot canonicalize an empty label sequence")
    seen: dict[Hashable, int] = {}
    out = []
    for lab in labels:
        if lab not in seen:
            seen[lab] = len(seen)
        out.append(seen[lab])
    return Partition(len(out), tuple(out))


def shape_of(p: Partition) -> PartitionShape:
    return PartitionShape.of(p.block_sizes)


def contingency(c: Partition, t: Partition) -> ContingencyTable:
    if c.n != t.n:
        raise InvalidPartitionError(f"partitions differ in size: {c.n} != {t.n}")
    counts = [[0] * t.num_blocks for _ in range(c.num_blocks)]
    for i, j in zip(c.assignment, t.assignment):
        counts[i][j] += 1
    return ContingencyTable(
        counts=tuple(tuple(row) for row in counts),
        row_sums=c.block_sizes,
        col_sums=t.block_sizes,
        total=c.n,
    )


# --------------------------------------------------------------------------
# exact counts

_bell_lock = threading.Lock()
_bell_values: list[int] = [1]
_bell_row: list[int] = [1]


def bell(n: int, limit: int = BELL_LIMIT) -> int:
    """Exact Bell number, grown lazily along the Bell triangle."""
    if n < 0:
        raise InvalidPartitionError("bell(n) requires n >= 0")
    if n > limit:
        raise LimitExceededError(f"bell({n}) exceeds the configured limit {limit}")
    global _bell_row
    if n >= len(_bell_values):
        with _bell_lock:
            while len(_bell_values) <= n:
                # next row starts with the last entry of the previous row
                row = [_bell_row[-1]]
                for x in _bell_row:
                    row.append(row[-1] + x)
                _bell_values.append(row[0])
                _bell_row = row
    return _bell_values[n]


_stirling_lock = threading.Lock()
_stirling_rows: list[list[int]] = [[1]]


def _stirling_row(n: int) -> list[int]:
    if n >= len(_stirling_rows):
        with _stirling_lock:
            while len(_stirling_rows) <= n:
                prev = _stirling_rows[-1]
                m = len(prev)
                row = [0] * (m + 1)
                for k in range(1, m + 1):
                    left = prev[k - 1]
                    right = prev[k] if k < m else 0
                    row[k] = k * right + left
                _stirling_rows.append(row)
    return _stirling_rows[n]


def stirling2(n: int, k: int, limit: int = BELL_LIMIT) -> int:
    """Number of partitions of ``n`` elements into exactly ``k`` blocks."""
    if n < 1 or not 1 <= k <= n:
        raise InvalidPartitionError(f"stirling2 requires 1 <= k <= n, got n={n}, k={k}")
    if n > limit:
        raise LimitExceededError(f"stirling2 with n={n} exceeds the limit {limit}")
    return _stirling_row(n)[k]


def count_with_shape(shape: PartitionShape) -> int:
    """Number of set partitions whose block sizes form ``shape``."""
    denom = 1
    for s in shape.sizes:
        denom *= math.factorial(s)
    for mult in Counter(shape.sizes).values():
        denom *= math.factorial(mult)
    return math.factorial(shape.n) // denom


def integer_partitions(n: int) -> Iterator[PartitionShape]:
    """All shapes of ``n`` in reverse lexicographic order."""

    def rec(remaining: int, cap: int) -> Iterator[tuple[int, ...]]:
        if remaining == 0:
            yield ()
            return
        for first in range(min(remaining, cap), 0, -1):
            for rest in rec(remaining - first, first):
                yield (first,) + rest

    for sizes in rec(n, n):
        yield PartitionShape(sizes)


def universe_size(family: str, n: int, shape: PartitionShape | None = None,
                  blocks: int | None = None) -> int:
    if family == "all":
        return bell(n)
    if family == "perm":
        if shape is None or shape.n != n:
            raise InvalidPartitionError("perm universe needs a shape summing to n")
        return count_with_shape(shape)
    if family == "num":
        if blocks is None:
            raise InvalidPartitionError("num universe needs a block count")
        return stirling2(n, blocks)
    if family == "interior":
        if n < 3:
            raise EmptyUniverseError(f"the interior universe is empty for n={n}")
        return bell(n) - 2
    raise InvalidPartitionError(f"unknown family {family!r}")


# --------------------------------------------------------------------------
# enumeration


def _check_limit(n: int, limit: int) -> None:
    if n < 1:
        raise InvalidPartitionError("n must be positive")
    if n > limit:
        raise LimitExceededError(f"n={n} exceeds the enumeration limit {limit}")


@lru_cache(maxsize=None)
def _all_rgs(n: int) -> np.ndarray:
    rows = np.zeros((1, 1), dtype=np.int8)
    top = np.zeros(1, dtype=np.int64)
    for _ in range(1, n):
        fan = top + 2
        parent = np.repeat(np.arange(rows.shape[0]), fan)
        starts = np.repeat(np.cumsum(fan) - fan, fan)
        child = np.arange(parent.size) - starts
        rows = np.concatenate([rows[parent], child[:, None].astype(np.int8)], axis=1)
        top = np.maximum(top[parent], child)
    rows.setflags(write=False)
    return rows


def block_size_matrix(arr: np.ndarray) -> np.ndarray:
    """Per-row block sizes, indexed by block id, zero padded to width n."""
    m, n = arr.shape
    flat = arr.astype(np.int64) + (np.arange(m, dtype=np.int64) * n)[:, None]
    return np.bincount(flat.ravel(), minlength=m * n).reshape(m, n)


def shape_keys(arr: np.ndarray) -> np.ndarray:
    """Per-row sizes sorted non-increasing; rows compare equal iff shapes match."""
    return -np.sort(-block_size_matrix(arr), axis=1)


@lru_cache(maxsize=None)
def _shape_index(n: int) -> dict[tuple[int, ...], np.ndarray]:
    keys = shape_keys(_all_rgs(n))
    out: dict[tuple[int, ...], list] = {}
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    for i, row in enumerate(uniq):
        sizes = tuple(int(s) for s in row if s > 0)
        idx = np.flatnonzero(inverse == i)
        idx.setflags(write=False)
        out[sizes] = idx
    return out


def universe_array(family: str, n: int, shape: PartitionShape | None = None,
                   blocks: int | None = None,
                   limit: int = DEFAULT_ENUM_LIMIT) -> np.ndarray:
    """Members of a universe as a read-only ``(count, n)`` int8 array in RGS order."""
    _check_limit(n, limit)
    everything = _all_rgs(n)
    if family == "all":
        return everything
    if family == "perm":
        if shape is None or shape.n != n:
            raise InvalidPartitionError("perm universe needs a shape summing to n")
        return everything[_shape_index(n)[shape.sizes]]
    if family == "num":
        if blocks is None or not 1 <= blocks <= n:
            raise InvalidPartitionError(f"num universe needs 1 <= k <= n, got {blocks}")
        return everything[everything.max(axis=1) + 1 == blocks]
    if family == "interior":
        if n < 3:
            raise EmptyUniverseError(f"the interior universe is empty for n={n}")
        # lexicographic order puts the 1-partition first and the N-partition last
        return everything[1:-1]
    raise InvalidPartitionError(f"unknown family {family!r}")


def enumerate_partitions(family: str, n: int, shape: PartitionShape | None = None,
                         blocks: int | None = None,
                         limit: int = DEFAULT_ENUM_LIMIT,
                         prefix: Sequence[int] = ()) -> Iterator[Partition]:
    """Yield each member of a universe once, in lexicographic RGS order.

    A non-empty ``prefix`` restricts the stream to strings starting with it,
    which splits a universe into disjoint sub-streams.
    """
    arr = universe_array(family, n, shape=shape, blocks=blocks, limit=limit)
    if prefix:
        k = len(prefix)
        arr = arr[np.all(arr[:, :k] == np.asarray(prefix, dtype=np.int8), axis=1)]
    for row in arr.tolist():
        yield Partition(n, tuple(row))


# --------------------------------------------------------------------------
# uniform sampling


@lru_cache(maxsize=None)
def _first_block_cumweights(m: int) -> tuple[int, ...]:
    # weight of "block of the first element has size j" is C(m-1, j-1) * B(m-j)
    acc = 0
    out = []
    for j in range(1, m + 1):
        acc += math.comb(m - 1, j - 1) * bell(m - j)
        out.append(acc)
    return tuple(out)


def draw_uniform(n: int, rng: random.Random) -> Partition:
    """One uniform draw from all ``bell(n)`` partitions of ``n`` elements."""
    remaining = list(range(n))
    assignment = [0] * n
    block = 0
    while remaining:
        m = len(remaining)
        cum = _first_block_cumweights(m)
        j = bisect.bisect_right(cum, rng.randrange(cum[-1])) + 1
        rest = remaining[1:]
        chosen = set(rng.sample(rest, j - 1))
        assignment[remaining[0]] = block
        for x in chosen:
            assignment[x] = block
        remaining = [x for x in rest if x not in chosen]
        block += 1
    # the smallest unassigned element always opens the next block, so the
    # assignment is already a restricted growth string
    return Partition(n, tuple(assignment))


def sample_uniform(n: int, seed: int, count: int) -> Iterator[Partition]:
    """Seed-deterministic stream of ``count`` uniform partitions of ``n`` elements."""
    if n < 1:
        raise InvalidPartitionError("n must be positive")
    rng = random.Random(seed)
    for _ in range(count):
        yield draw_uniform(n, rng)
