import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hermkern.multiindex import (
    INDEX_LIMIT,
    GradedIndexMap,
    MultiIndex,
    count,
    count_degree,
    enumerate_indices,
)


def brute_force(d, N):
    # every tuple in the box, then sorted by (degree, tuple): the documented order
    box = [t for t in itertools.product(range(N + 1), repeat=d) if sum(t) <= N]
    return sorted(box, key=lambda t: (sum(t), t))


def test_enumerate_single_variable():
    assert enumerate_indices(1, 5) == [(0,), (1,), (2,), (3,), (4,), (5,)]


def test_enumerate_d2_n1_lexicographic():
    assert enumerate_indices(2, 1) == [(0, 0), (0, 1), (1, 0)]


def test_enumerate_zero_degree():
    assert enumerate_indices(3, 0) == [(0, 0, 0)]


@pytest.mark.parametrize("d,N,expected", [(2, 3, 10), (1, 7, 8), (4, 2, 15)])
def test_count_examples(d, N, expected):
    assert count(d, N) == expected


def test_count_overflow_is_reported():
    with pytest.raises(OverflowError):
        count(12, 200)
    assert comb(200 + 12, 12) > INDEX_LIMIT


@pytest.mark.parametrize("d", [1, 2, 3, 4])
@pytest.mark.parametrize("N", [0, 1, 5, 12])
def test_enumerate_matches_brute_force(d, N):
    got = enumerate_indices(d, N)
    assert got == brute_force(d, N)
    assert len(got) == count(d, N) == len(set(got))


@given(st.integers(1, 5), st.integers(0, 15))
def test_degree_shell_count(d, N):
    assert count(d, N) - (count(d, N - 1) if N else 0) == count_degree(d, N) == comb(N + d - 1, d - 1)


def test_rank_unrank_round_trip_d3_n4():
    gm = GradedIndexMap(3, 4)
    for i in range(gm.size):
        assert gm.rank(gm.unrank(i)) == i
    assert gm.rank((0, 0, 0)) == 0
    assert gm.unrank(0) == (0, 0, 0)


@given(st.integers(1, 4), st.integers(0, 9), st.data())
def test_rank_consistent_with_enumeration(d, N, data):
    gm = GradedIndexMap(d, N)
    i = data.draw(st.integers(0, gm.size - 1))
    alpha = enumerate_indices(d, N)[i]
    assert gm.rank(alpha) == i
    assert tuple(gm.indices[i]) == alpha


def test_rank_strictly_monotone_along_enumeration():
    gm = GradedIndexMap(3, 6)
    ranks = [gm.rank(a) for a in enumerate_indices(3, 6)]
    assert ranks == sorted(ranks) == list(range(gm.size))


@pytest.mark.parametrize("bad", [(5, 0), (1, 1, 1), (0,)])
def test_rank_range_errors(bad):
    with pytest.raises(IndexError):
        GradedIndexMap(2, 4).rank(bad)


def test_unrank_range_errors():
    gm = GradedIndexMap(2, 2)
    with pytest.raises(IndexError):
        gm.unrank(gm.size)
    with pytest.raises(IndexError):
        gm.unrank(-1)


def test_multiindex_validation():
    a = MultiIndex((2, 0, 3))
    assert a.d == 3 and a.degree() == 5
    assert a.factorial_log() == pytest.approx(np.log(12.0))
    with pytest.raises(ValueError):
        MultiIndex((1, -1))
    with pytest.raises(ValueError):
        MultiIndex(())


def test_index_arrays_are_read_only():
    gm = GradedIndexMap(2, 3)
    with pytest.raises(ValueError):
        gm.indices[0, 0] = 7
    assert np.array_equal(gm.degrees, gm.indices.sum(axis=1))
