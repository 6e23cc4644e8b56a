"""Multi-index bookkeeping for derivatives, moments and cumulants.

A multi-index a = (a_1, ..., a_g) of nonnegative integers labels the mixed
partial of order a_i in the i-th variable; |a| = sum a_i is its order.
Public entry points accept either a :class:`MultiIndex` or any sequence of
ints and normalize through :func:`exponents`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb, factorial
from typing import Iterable, Iterator, Sequence


@dataclass(frozen=True)
class MultiIndex:
    """Exponent vector a in N^g with |a| = sum(a)."""

    a: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(x) for x in self.a)
        if any(x < 0 for x in a):
            raise ValueError("multi-index components must be nonnegative")
        object.__setattr__(self, "a", a)

    @property
    def order(self) -> int:
        return sum(self.a)

    @property
    def factorial(self) -> int:
        """a! = a_1! ... a_g!"""
        out = 1
        for x in self.a:
            out *= factorial(x)
        return out

    def __len__(self) -> int:
        return len(self.a)

    def __iter__(self) -> Iterator[int]:
        return iter(self.a)

    def __getitem__(self, i: int) -> int:
        return self.a[i]


def exponents(a, g: int | None = None) -> tuple[int, ...]:
    """Normalize `a` to a validated exponent tuple, checking the dimension."""
    if isinstance(a, MultiIndex):
        t = a.a
    elif isinstance(a, Iterable):
        t = MultiIndex(tuple(a)).a
    else:
        t = MultiIndex((a,)).a
    if g is not None and len(t) != g:
        raise ValueError(f"multi-index has length {len(t)}, expected {g}")
    return t


def order(a) -> int:
    return sum(exponents(a))


def mi_binomial(a: Sequence[int], b: Sequence[int]) -> int:
    """Product of componentwise binomials C(a, b) = prod_i C(a_i, b_i)."""
    out = 1
    for ai, bi in zip(a, b):
        out *= comb(ai, bi)
    return out


def sub_indices(a: Sequence[int]) -> list[tuple[int, ...]]:
    """All b with 0 <= b <= a componentwise, in lexicographic order."""
    return list(itertools.product(*[range(x + 1) for x in a]))


def indices_of_order(g: int, k: int) -> list[tuple[int, ...]]:
    """All multi-indices of length g with |a| = k, lexicographically descending.

    This is the graded-lex convention used for projective coordinates:
    (2,0) before (1,1) before (0,2).
    """
    out = [a for a in itertools.product(range(k + 1), repeat=g) if sum(a) == k]
    out.sort(reverse=True)
    return out


def indices_up_to(g: int, max_order: int) -> list[tuple[int, ...]]:
    """All multi-indices with |a| <= max_order, graded then lex descending."""
    out: list[tuple[int, ...]] = []
    for k in range(max_order + 1):
        out.extend(indices_of_order(g, k))
    return out


def moment_map_indices(g: int, d: int) -> list[tuple[int, ...]]:
    """Coordinate ordering of the degree-d projective moment map: the
    constant index a = 0 first, then grades 2..d (order-one indices are
    excluded), lex descending within each grade."""
    out: list[tuple[int, ...]] = [(0,) * g]
    for k in range(2, d + 1):
        out.extend(indices_of_order(g, k))
    return out
