import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from scipy import stats

from oracles import P, brute_partitions, partitions, stirling_explicit
from partnfl.errors import (
    EmptyUniverseError,
    InvalidPartitionError,
    LimitExceededError,
)
from partnfl.partitions import (
    Partition,
    PartitionShape,
    bell,
    canonicalize,
    contingency,
    count_with_shape,
    enumerate_partitions,
    integer_partitions,
    n_partition,
    one_partition,
    sample_uniform,
    shape_of,
    stirling2,
    universe_array,
)


@pytest.mark.parametrize("labels, expected", [
    (["a", "a", "b"], (0, 0, 1)),
    (["x", "y", "x"], (0, 1, 0)),
    (["q", "q", "q"], (0, 0, 0)),
    ([7, 3, 3, 9, 7], (0, 1, 1, 2, 0)),
])
def test_canonicalize(labels, expected):
    assert canonicalize(labels).assignment == expected


def test_canonicalize_rejects_empty():
    with pytest.raises(InvalidPartitionError):
        canonicalize([])


@pytest.mark.parametrize("bad", [(1, 0), (0, 2), (0, -1)])
def test_partition_rejects_non_rgs(bad):
    with pytest.raises(InvalidPartitionError):
        Partition(len(bad), bad)


def test_partition_rejects_length_mismatch():
    with pytest.raises(InvalidPartitionError):
        Partition(3, (0, 0))


@given(partitions(max_n=10))
def test_canonicalize_relabel_invariant(p):
    relabel = {b: f"block-{(7 * b) % 13}" for b in range(p.num_blocks)}
    assert canonicalize([relabel[b] for b in p.assignment]) == p


@pytest.mark.parametrize("assignment, sizes", [
    ((0, 0, 1), (2, 1)),
    ((0, 0, 0), (3,)),
    ((0, 1, 2), (1, 1, 1)),
    ((0, 1, 0, 2, 1, 0), (3, 2, 1)),
])
def test_shape_of(assignment, sizes):
    assert shape_of(P(*assignment)).sizes == sizes


def test_shape_validation():
    with pytest.raises(InvalidPartitionError):
        PartitionShape((1, 2))
    with pytest.raises(InvalidPartitionError):
        PartitionShape((2, 0))
    assert PartitionShape.of([1, 3, 2]).sizes == (3, 2, 1)


def test_contingency_identical():
    tbl = contingency(P(0, 0, 1), P(0, 0, 1))
    assert tbl.counts == ((2, 0), (0, 1))
    assert tbl.row_sums == (2, 1) and tbl.col_sums == (2, 1) and tbl.total == 3


def test_contingency_one_vs_n():
    tbl = contingency(P(0, 0, 0), P(0, 1, 2))
    assert tbl.counts == ((1, 1, 1),)


def test_contingency_hand_count():
    # c blocks {0,1},{2}; t blocks {0},{1,2}
    assert contingency(P(0, 0, 1), P(0, 1, 1)).counts == ((1, 1), (0, 1))


def test_contingency_size_mismatch():
    with pytest.raises(InvalidPartitionError):
        contingency(P(0, 0), P(0, 1, 1))


@given(partitions(max_n=9), partitions(max_n=9))
def test_contingency_marginals(c, t):
    if c.n != t.n:
        return
    tbl = contingency(c, t)
    assert tuple(sum(r) for r in tbl.counts) == tbl.row_sums
    assert tuple(map(sum, zip(*tbl.counts))) == tbl.col_sums
    assert sum(map(sum, tbl.counts)) == c.n
    assert all(any(r) for r in tbl.counts)
    assert all(any(col) for col in zip(*tbl.counts))


def test_bell_values():
    assert bell(0) == 1
    assert bell(3) == 5
    assert bell(12) == 4213597
    # exceeds 64 bits from n = 26 on
    assert bell(26) > 2**64 > bell(25)


def test_bell_limit():
    with pytest.raises(LimitExceededError):
        bell(501)
    assert bell(30, limit=30) == sum(stirling_explicit(30, k) for k in range(1, 31))


@pytest.mark.parametrize("n", range(1, 10))
def test_bell_matches_brute_force(n):
    assert bell(n) == len(brute_partitions(n))


@pytest.mark.parametrize("n, k, expected", [(3, 1, 1), (3, 2, 3), (4, 2, 7)])
def test_stirling2_examples(n, k, expected):
    assert stirling2(n, k) == expected


def test_stirling2_against_brute_force():
    for n in range(1, 9):
        counts = Counter(p.num_blocks for p in brute_partitions(n))
        for k in range(1, n + 1):
            assert stirling2(n, k) == counts[k] == stirling_explicit(n, k)


@pytest.mark.parametrize("n, k", [(3, 0), (3, 4), (0, 0)])
def test_stirling2_range(n, k):
    with pytest.raises(InvalidPartitionError):
        stirling2(n, k)


@pytest.mark.parametrize("n", range(1, 31))
def test_stirling_rows_sum_to_bell(n):
    assert sum(stirling2(n, k) for k in range(1, n + 1)) == bell(n)


@pytest.mark.parametrize("sizes, expected", [((2, 1), 3), ((3,), 1), ((1, 1, 1), 1),
                                             ((2, 2), 3), ((3, 2, 2), 105)])
def test_count_with_shape(sizes, expected):
    assert count_with_shape(PartitionShape(sizes)) == expected


def test_count_with_shape_against_brute_force():
    for n in range(1, 9):
        counts = Counter(shape_of(p).sizes for p in brute_partitions(n))
        for shape in integer_partitions(n):
            assert count_with_shape(shape) == counts[shape.sizes]


@pytest.mark.parametrize("n", range(1, 16))
def test_shape_counts_sum_to_bell(n):
    assert sum(count_with_shape(s) for s in integer_partitions(n)) == bell(n)


def test_enumerate_three_node_universes():
    assert [p.assignment for p in enumerate_partitions("all", 3)] == [
        (0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1), (0, 1, 2)]
    perm = list(enumerate_partitions("perm", 3, shape=PartitionShape((2, 1))))
    assert len(perm) == 3
    assert all(shape_of(p).sizes == (2, 1) for p in perm)
    assert [p.assignment for p in enumerate_partitions("num", 3, blocks=3)] == [(0, 1, 2)]


def test_enumerate_is_lexicographic_and_complete():
    for n in range(1, 9):
        got = [p.assignment for p in enumerate_partitions("all", n)]
        assert got == sorted(got)
        assert set(got) == {p.assignment for p in brute_partitions(n)}


@pytest.mark.parametrize("n", range(1, 11))
def test_enumeration_counts(n):
    assert universe_array("all", n).shape[0] == bell(n)
    for k in range(1, n + 1):
        assert universe_array("num", n, blocks=k).shape[0] == stirling2(n, k)
    for shape in integer_partitions(n):
        assert universe_array("perm", n, shape=shape).shape[0] == count_with_shape(shape)
    if n >= 3:
        interior = universe_array("interior", n)
        assert interior.shape[0] == bell(n) - 2
        assert not any(Partition(n, tuple(r)).is_boundary for r in interior.tolist())


def test_enumerate_round_trip():
    for n in range(1, 8):
        for p in enumerate_partitions("all", n):
            assert canonicalize(list(p.assignment)) == p


def test_enumerate_prefix_substreams_cover_universe():
    n = 6
    parts = [list(enumerate_partitions("all", n, prefix=(0, b))) for b in (0, 1)]
    assert sum(map(len, parts)) == bell(n)
    assert {p for part in parts for p in part} == set(enumerate_partitions("all", n))


def test_enumerate_errors():
    with pytest.raises(LimitExceededError):
        list(enumerate_partitions("all", 13))
    assert len(universe_array("all", 13, limit=13)) == bell(13)
    with pytest.raises(EmptyUniverseError):
        list(enumerate_partitions("interior", 2))


def test_boundary_helpers():
    assert one_partition(4).is_one_partition
    assert n_partition(4).is_n_partition
    assert one_partition(1) == n_partition(1)


def test_sample_n1():
    assert all(p.assignment == (0,) for p in sample_uniform(1, 123, 50))


def test_sample_deterministic():
    a = [p.assignment for p in sample_uniform(9, 2024, 200)]
    b = [p.assignment for p in sample_uniform(9, 2024, 200)]
    c = [p.assignment for p in sample_uniform(9, 2025, 200)]
    assert a == b and a != c


def test_sample_n3_frequencies():
    count = 100_000
    freq = Counter(p.assignment for p in sample_uniform(3, 11, count))
    assert len(freq) == 5
    sigma = (0.2 * 0.8 / count) ** 0.5
    for k in freq.values():
        assert abs(k / count - 0.2) <= 4 * sigma


def test_sample_n8_block_count_mean():
    exact = np.mean([p.num_blocks for p in brute_partitions(8)])
    count = 100_000
    blocks = np.array([p.num_blocks for p in sample_uniform(8, 7, count)])
    stderr = blocks.std(ddof=1) / count ** 0.5
    assert abs(blocks.mean() - exact) <= 4 * stderr


@pytest.mark.parametrize("n, seed", [(4, 1), (6, 2)])
def test_sample_chi_square(n, seed):
    count = 20_000 * bell(n) // 15
    freq = Counter(p.assignment for p in sample_uniform(n, seed, count))
    observed = [freq[p.assignment] for p in enumerate_partitions("all", n)]
    assert sum(observed) == count
    assert stats.chisquare(observed).pvalue > 1e-3
