"""Multi-indices in N^d up to a truncation degree.

Every coefficient vector and kernel matrix in the package stores its entries
in *graded-lex* order: multi-indices are sorted by degree ``|alpha|`` first and
then lexicographically (ascending, read left to right) within a degree.  For
``d = 2, N = 2`` this gives::

    (0,0) (0,1) (1,0) (0,2) (1,1) (2,0)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb, lgamma
from typing import Iterator, Sequence

import numpy as np

ORDERING = "graded-lex"

#: Largest admissible number of indices in one truncation.
INDEX_LIMIT = 2**31 - 1


class MultiIndex(tuple):
    """An element of N^d, stored as an immutable tuple of ints."""

    def __new__(cls, components: Sequence[int]):
        comps = tuple(int(c) for c in components)
        if not comps:
            raise ValueError("a multi-index needs at least one component")
        if any(c < 0 for c in comps):
            raise ValueError(f"negative component in multi-index {comps}")
        return super().__new__(cls, comps)

    @property
    def d(self) -> int:
        return len(self)

    def degree(self) -> int:
        return sum(self)

    def factorial_log(self) -> float:
        """log(alpha!) = sum of log(alpha_i!)."""
        return sum(lgamma(c + 1) for c in self)

    def __repr__(self) -> str:
        return f"MultiIndex{tuple(self)}"


def count(d: int, N: int) -> int:
    """Number of alpha in N^d with |alpha| <= N, i.e. binomial(N + d, d).

    Raises OverflowError when the count exceeds :data:`INDEX_LIMIT`.
    """
    _check_dims(d, N)
    m = comb(N + d, d)
    if m > INDEX_LIMIT:
        raise OverflowError(f"count({d}, {N}) = {m} exceeds the index limit {INDEX_LIMIT}")
    return m


def count_degree(d: int, n: int) -> int:
    """Number of alpha in N^d with |alpha| == n."""
    if n < 0:
        return 0
    return comb(n + d - 1, d - 1)


def _compositions(n: int, d: int) -> Iterator[tuple[int, ...]]:
    # lexicographically ascending compositions of n into d non-negative parts
    if d == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, d - 1):
            yield (first,) + rest


def enumerate_indices(d: int, N: int) -> list[MultiIndex]:
    """All multi-indices of degree <= N in graded-lex order."""
    count(d, N)
    return [MultiIndex(c) for n in range(N + 1) for c in _compositions(n, d)]


def _check_dims(d: int, N: int) -> None:
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    if int(N) != N or N < 0:
        raise ValueError(f"truncation degree must be a non-negative integer, got {N!r}")


@dataclass(frozen=True)
class GradedIndexMap:
    """Bijection between {alpha in N^d : |alpha| <= N} and 0..size-1."""

    d: int
    N: int
    size: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "size", count(self.d, self.N))

    @cached_property
    def indices(self) -> np.ndarray:
        """(size, d) integer array of the multi-indices, in rank order."""
        arr = np.array(enumerate_indices(self.d, self.N), dtype=np.int64)
        arr.setflags(write=False)
        return arr

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = self.indices.sum(axis=1)
        deg.setflags(write=False)
        return deg

    @cached_property
    def log_factorials(self) -> np.ndarray:
        """log(alpha!) for every index, via log-Gamma."""
        from scipy.special import gammaln

        lf = gammaln(self.indices + 1.0).sum(axis=1)
        lf.setflags(write=False)
        return lf

    def rank(self, alpha: Sequence[int]) -> int:
        alpha = MultiIndex(alpha)
        if alpha.d != self.d:
            raise IndexError(f"multi-index {tuple(alpha)} has dimension {alpha.d}, map has {self.d}")
        n = alpha.degree()
        if n > self.N:
            raise IndexError(f"degree {n} of {tuple(alpha)} exceeds truncation {self.N}")
        r = comb(n - 1 + self.d, self.d) if n > 0 else 0
        # position inside degree n: count compositions that precede alpha lexicographically
        remaining = n
        for i, a in enumerate(alpha[:-1]):
            parts_left = self.d - i - 1
            for c in range(a):
                r += count_degree(parts_left, remaining - c)
            remaining -= a
        return r

    def unrank(self, i: int) -> MultiIndex:
        if not 0 <= i < self.size:
            raise IndexError(f"linear index {i} outside [0, {self.size})")
        return MultiIndex(self.indices[i])

    def __len__(self) -> int:
        return self.size

    def __iter__(self) -> Iterator[MultiIndex]:
        return (MultiIndex(row) for row in self.indices)
