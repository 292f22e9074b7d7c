"""Uniform random models over partition universes, and E/Var of statistics under them.

Every model is one-sided: the ground truth ``t`` is held fixed and only the
compared partition varies over the model's universe.

Sampling constructions
----------------------
``all``
    The block holding the first unassigned element has size ``j`` with
    probability ``C(m-1, j-1) * B(m-j) / B(m)``; recurse on the rest.
``perm``
    Shuffle the elements uniformly and cut the shuffled order into blocks of
    the prescribed sizes.  Each set partition of that shape arises from exactly
    ``prod(s!) * prod(mult_s!)`` orderings (order inside each block, and order
    among equal-size blocks), a count that depends only on the shape.  The law
    induced on distinct partitions is therefore uniform, and no rejection or
    reweighting step is needed.
``num``
    Walking down from element ``m`` with ``j`` blocks left: it opens a block
    with probability ``S(m-1, j-1) / S(m, j)``, otherwise it joins one of the
    ``j`` blocks formed by the first ``m - 1`` elements, chosen uniformly.
``interior``
    Draw from ``all`` and reject the two boundary partitions.
"""

from __future__ import annotations

import math
import random
import threading
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
import numpy as np

from .errors import EmptyUniverseError, InvalidPartitionError
from .infotheory import mi_batch, nmi_batch, ri_batch
from .partitions import (
    DEFAULT_ENUM_LIMIT,
    FAMILIES,
    Partition,
    PartitionShape,
    canonicalize,
    draw_uniform,
    shape_of,
    stirling2,
    universe_array,
    universe_size,
)

STATS = ("MI", "RI", "NMI")


@dataclass(frozen=True)
class RandomModel:
    """A named universe with the uniform law.

    ``perm`` without an explicit ``shape`` borrows the shape of a reference
    partition at resolution time (see :meth:`resolve`).
    """

    family: str = "all"
    shape: PartitionShape | None = None
    blocks: int | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise InvalidPartitionError(f"unknown random model family {self.family!r}")
        if self.family == "num" and (self.blocks is None or self.blocks < 1):
            raise InvalidPartitionError("the num model needs a block count k >= 1")

    @classmethod
    def all(cls) -> "RandomModel":
        return cls("all")

    @classmethod
    def perm(cls, shape: PartitionShape | None = None) -> "RandomModel":
        return cls("perm", shape=shape)

    @classmethod
    def num(cls, blocks: int) -> "RandomModel":
        return cls("num", blocks=blocks)

    @classmethod
    def interior(cls) -> "RandomModel":
        return cls("interior")

    def resolve(self, reference: Partition) -> "RandomModel":
        if self.family == "perm" and self.shape is None:
            return replace(self, shape=shape_of(reference))
        return self

    def check(self, n: int) -> None:
        if self.family == "perm" and self.shape is not None and self.shape.n != n:
            raise InvalidPartitionError(
                f"shape {self.shape} does not sum to n={n}"
            )
        if self.family == "num" and self.blocks > n:
            raise InvalidPartitionError(f"num model with k={self.blocks} > n={n}")
        if self.family == "interior" and n < 3:
            raise EmptyUniverseError(f"the interior universe is empty for n={n}")

    def size(self, n: int) -> int:
        self.check(n)
        return universe_size(self.family, n, shape=self.shape, blocks=self.blocks)

    def universe(self, n: int, limit: int = DEFAULT_ENUM_LIMIT) -> np.ndarray:
        self.check(n)
        if self.family == "perm" and self.shape is None:
            raise InvalidPartitionError("resolve the perm model's shape first")
        return universe_array(self.family, n, shape=self.shape, blocks=self.blocks,
                              limit=limit)

    def draw(self, n: int, rng: random.Random) -> Partition:
        self.check(n)
        if self.family == "all":
            return draw_uniform(n, rng)
        if self.family == "perm":
            if self.shape is None:
                raise InvalidPartitionError("resolve the perm model's shape first")
            return draw_with_shape(self.shape, rng)
        if self.family == "num":
            return draw_with_blocks(n, self.blocks, rng)
        return draw_interior(n, rng)

    def __str__(self) -> str:
        if self.family == "perm":
            return f"perm({self.shape})" if self.shape else "perm"
        if self.family == "num":
            return f"num({self.blocks})"
        return self.family


def draw_with_shape(shape: PartitionShape, rng: random.Random) -> Partition:
    order = list(range(shape.n))
    rng.shuffle(order)
    labels = [0] * shape.n
    pos = 0
    for block, size in enumerate(shape.sizes):
        for x in order[pos:pos + size]:
            labels[x] = block
        pos += size
    return canonicalize(labels)


def draw_with_blocks(n: int, k: int, rng: random.Random) -> Partition:
    if not 1 <= k <= n:
        raise InvalidPartitionError(f"need 1 <= k <= n, got n={n}, k={k}")
    # decide top-down which elements open a new block, then replay bottom-up
    opens = [False] * n
    m, j = n, k
    while m > 0:
        if j == m:
            for i in range(m):
                opens[i] = True
            break
        if j == 1:
            opens[0] = True
            break
        total = stirling2(m, j)
        if rng.randrange(total) < stirling2(m - 1, j - 1):
            opens[m - 1] = True
            j -= 1
        m -= 1
    # an element that does not open a block joins one of the blocks already
    # opened by smaller elements; at that point there are exactly as many
    # of those as the block count of its recursion stage
    labels = [0] * n
    count = 0
    for i in range(n):
        if opens[i]:
            labels[i] = count
            count += 1
        else:
            labels[i] = rng.randrange(count)
    return canonicalize(labels)


def draw_interior(n: int, rng: random.Random) -> Partition:
    if n < 3:
        raise EmptyUniverseError(f"the interior universe is empty for n={n}")
    while True:
        p = draw_uniform(n, rng)
        if not p.is_boundary:
            return p


# --------------------------------------------------------------------------
# expectations


@dataclass(frozen=True)
class Method:
    """``exact`` enumerates the universe; ``mc`` averages seeded uniform draws."""

    kind: str = "exact"
    samples: int | None = None
    seed: int | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("exact", "mc"):
            raise ValueError(f"unknown method {self.kind!r}")
        if self.kind == "mc":
            if self.samples is None or self.samples < 2:
                raise ValueError("Monte Carlo needs at least two samples")
            if self.seed is None:
                raise ValueError("Monte Carlo needs a seed")
            if self.workers < 1:
                raise ValueError("workers must be positive")

    @classmethod
    def monte_carlo(cls, samples: int, seed: int, workers: int = 1) -> "Method":
        return cls("mc", samples=samples, seed=seed, workers=workers)

    def __str__(self) -> str:
        return "exact" if self.kind == "exact" else f"mc({self.samples}, seed={self.seed})"


EXACT = Method()


@dataclass(frozen=True)
class ExpectationEstimate:
    """A moment of a statistic under a random model.

    ``mean`` is E[stat] for :func:`expected_stat` and Var[stat] for
    :func:`variance_stat`.  ``std`` is the spread of the per-member values
    being averaged; ``stderr`` is only set for Monte Carlo estimates.
    """

    mean: float
    std: float | None
    method: str
    samples: int | None = None
    stderr: float | None = None

    @property
    def value(self) -> float:
        return self.mean


def stat_batch(stat: str, arr: np.ndarray, t: Partition,
               normalization: str = "max") -> np.ndarray:
    """Evaluate ``stat(row, t)`` for every row of a universe array."""
    if stat == "MI":
        return mi_batch(arr, t)
    if stat == "RI":
        return ri_batch(arr, t)
    if stat == "NMI":
        return nmi_batch(arr, t, normalization)
    raise ValueError(f"unknown statistic {stat!r}")


def _seed_streams(seed: int, workers: int) -> list[random.Random]:
    if workers == 1:
        return [random.Random(seed)]
    children = np.random.SeedSequence(seed % (1 << 128)).spawn(workers)
    return [random.Random(int(c.generate_state(2, np.uint64).view(np.uint64)[0]))
            for c in children]


def sample_array(model: RandomModel, n: int, samples: int, seed: int,
                 workers: int = 1) -> np.ndarray:
    """Seeded uniform draws from ``model`` as an ``(samples, n)`` int8 array.

    With several workers each draws its share from its own stream spawned
    from ``seed``; rows are concatenated in worker order, so the result only
    depends on ``(seed, workers)``.
    """
    streams = _seed_streams(seed, workers)
    shares = [samples // workers + (1 if w < samples % workers else 0)
              for w in range(workers)]

    def work(w: int) -> list[tuple[int, ...]]:
        rng = streams[w]
        return [model.draw(n, rng).assignment for _ in range(shares[w])]

    if workers == 1:
        rows = work(0)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(workers)))
        rows = [r for part in parts for r in part]
    return np.asarray(rows, dtype=np.int8).reshape(samples, n)


@dataclass(frozen=True)
class _Moments:
    mean: float
    var: float
    sample_var: float | None
    mean_stderr: float | None
    var_stderr: float | None
    samples: int | None


_cache: dict[tuple, _Moments] = {}
_cache_lock = threading.Lock()

_VALUES_KEEP = 16
_values: OrderedDict[tuple, np.ndarray] = OrderedDict()
_values_lock = threading.Lock()


def clear_cache() -> None:
    with _cache_lock:
        _cache.clear()
    with _values_lock:
        _values.clear()


def universe_values(stat: str, t: Partition, model: RandomModel,
                    normalization: str = "max",
                    limit: int = DEFAULT_ENUM_LIMIT) -> np.ndarray:
    """``stat(C', t)`` for every C' of the model's universe, in enumeration order.

    The most recent arrays are kept so that scoring a universe and taking
    its expectation evaluate the statistic once.
    """
    key = (stat, normalization, t.assignment, model)
    with _values_lock:
        hit = _values.get(key)
        if hit is not None:
            _values.move_to_end(key)
            return hit
    values = stat_batch(stat, model.universe(t.n, limit=limit), t, normalization)
    values.setflags(write=False)
    with _values_lock:
        _values[key] = values
        while len(_values) > _VALUES_KEEP:
            _values.popitem(last=False)
    return values


def _moments(stat: str, t: Partition, model: RandomModel, method: Method,
             normalization: str, limit: int) -> _Moments:
    key = (stat, normalization, t.assignment, model, method)
    hit = _cache.get(key)
    if hit is not None:
        return hit
    n = t.n
    if method.kind == "exact":
        values = universe_values(stat, t, model, normalization, limit)
        mean = math.fsum(values) / values.size
        var = math.fsum((values - mean) ** 2) / values.size
        out = _Moments(mean, max(var, 0.0), None, None, None, None)
    else:
        model.check(n)
        arr = sample_array(model, n, method.samples, method.seed, method.workers)
        values = stat_batch(stat, arr, t, normalization)
        m = values.size
        mean = math.fsum(values) / m
        sq = (values - mean) ** 2
        sample_var = math.fsum(sq) / (m - 1)
        std = math.sqrt(sample_var)
        var_stderr = float(np.std(sq, ddof=1)) / math.sqrt(m)
        out = _Moments(mean, sample_var, sample_var, std / math.sqrt(m), var_stderr, m)
    with _cache_lock:
        _cache.setdefault(key, out)
    return out


def _prepare(stat: str, t: Partition, model: RandomModel) -> RandomModel:
    if stat not in STATS:
        raise ValueError(f"unknown statistic {stat!r}")
    model = model.resolve(t)
    model.check(t.n)
    return model


def expected_stat(stat: str, t: Partition, model: RandomModel = RandomModel.all(),
                  method: Method = EXACT, normalization: str = "max",
                  limit: int = DEFAULT_ENUM_LIMIT) -> ExpectationEstimate:
    """E[stat(C', t)] for C' uniform over the model's universe.

    ``normalization`` only matters for ``stat="NMI"``.  A ``perm`` model
    without a shape uses the shape of ``t``.
    """
    model = _prepare(stat, t, model)
    mom = _moments(stat, t, model, method, normalization, limit)
    if method.kind == "exact":
        return ExpectationEstimate(mom.mean, math.sqrt(mom.var), "exact")
    return ExpectationEstimate(mom.mean, math.sqrt(mom.sample_var), "monte-carlo",
                               samples=mom.samples, stderr=mom.mean_stderr)


def variance_stat(stat: str, t: Partition, model: RandomModel = RandomModel.all(),
                  method: Method = EXACT, normalization: str = "max",
                  limit: int = DEFAULT_ENUM_LIMIT) -> ExpectationEstimate:
    """Var[stat(C', t)]: population variance (exact) or unbiased sample variance."""
    model = _prepare(stat, t, model)
    mom = _moments(stat, t, model, method, normalization, limit)
    if method.kind == "exact":
        return ExpectationEstimate(mom.var, math.sqrt(mom.var), "exact")
    return ExpectationEstimate(mom.sample_var, math.sqrt(mom.sample_var), "monte-carlo",
                               samples=mom.samples, stderr=mom.var_stderr)
