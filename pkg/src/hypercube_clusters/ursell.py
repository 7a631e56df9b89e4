"""Ursell function of small graphs, two independent ways.

``ursell_direct`` sums (-1)^|A| over connected spanning edge subsets A.
``ursell_fast`` never touches edge subsets: it uses the exponential formula
on vertex subsets (independent-set counts -> ranked zeta transform ->
power-series log -> Moebius inversion), costing O(2^n n^2) ring operations.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import factorial
from typing import Iterable

import numpy as np

DIRECT_MAX_N = 12
FAST_MAX_N = 20


class GraphTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class SmallGraph:
    n: int
    adj: tuple[int, ...]  # adj[i] is a bitmask of neighbours of i

    def __post_init__(self):
        if len(self.adj) != self.n:
            raise ValueError("adjacency length must equal n")
        for i, row in enumerate(self.adj):
            if row >> i & 1:
                raise ValueError("self-loops are not allowed")
            for j in range(self.n):
                if (row >> j & 1) != (self.adj[j] >> i & 1):
                    raise ValueError("adjacency must be symmetric")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "SmallGraph":
        adj = [0] * n
        for i, j in edges:
            if i == j:
                continue
            adj[i] |= 1 << j
            adj[j] |= 1 << i
        return cls(n, tuple(adj))

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n) if self.adj[i] >> j & 1]

    def is_connected(self) -> bool:
        if self.n == 0:
            return False
        full = (1 << self.n) - 1
        seen = frontier = 1
        while frontier:
            nxt = 0
            f = frontier
            while f:
                low = f & -f
                nxt |= self.adj[low.bit_length() - 1]
                f ^= low
            frontier = nxt & ~seen
            seen |= frontier
        return seen == full


def complete_graph(n: int) -> SmallGraph:
    return SmallGraph.from_edges(n, combinations(range(n), 2))


def path_graph(n: int) -> SmallGraph:
    return SmallGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(n: int) -> SmallGraph:
    return SmallGraph.from_edges(n, [(0, i) for i in range(1, n)])


def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _connected_spanning(n: int, edges: list[tuple[int, int]], mask: int) -> bool:
    parent = list(range(n))
    comps = n
    m = mask
    while m:
        low = m & -m
        i, j = edges[low.bit_length() - 1]
        ri, rj = _find(parent, i), _find(parent, j)
        if ri != rj:
            parent[ri] = rj
            comps -= 1
            if comps == 1:
                return True
        m ^= low
    return comps == 1


@lru_cache(maxsize=4096)
def _direct_sum(n: int, adj: tuple[int, ...]) -> int:
    edges = SmallGraph(n, adj).edges()
    if n == 1:
        return 1
    if len(edges) < n - 1:
        return 0
    total = 0
    for mask in range(1 << len(edges)):
        if mask.bit_count() >= n - 1 and _connected_spanning(n, edges, mask):
            total += -1 if mask.bit_count() & 1 else 1
    return total


def ursell_direct(H: SmallGraph) -> Fraction:
    if H.n > DIRECT_MAX_N:
        raise GraphTooLarge(f"ursell_direct supports n <= {DIRECT_MAX_N}, got {H.n}")
    if H.n == 0:
        return Fraction(0)
    return Fraction(_direct_sum(H.n, H.adj), factorial(H.n))


def _connected_signed_sum(n: int, adj: tuple[int, ...]) -> int:
    """Sum of (-1)^|A| over connected spanning A, via vertex-subset transforms."""
    size = 1 << n
    # indep[X]: X is an independent set of H
    indep = np.zeros(size, dtype=bool)
    indep[0] = True
    adjm = np.array(adj, dtype=np.int64)
    idx = np.arange(size, dtype=np.int64)
    for bit in range(n):
        lo = 1 << bit
        sl = slice(lo, 2 * lo)
        rest = idx[sl] ^ lo
        indep[sl] = indep[rest] & ((adjm[bit] & rest) == 0)
    pop = np.bitwise_count(idx).astype(np.int64)

    # ranked zeta transform: f[r, Y] = #independent subsets of Y of size r
    f = np.zeros((n + 1, size), dtype=np.int64)
    f[pop, idx] = indep
    f = f.reshape((n + 1,) + (2,) * n)
    for axis in range(1, n + 1):
        lo = [slice(None)] * (n + 1)
        hi = [slice(None)] * (n + 1)
        lo[axis], hi[axis] = 0, 1
        f[tuple(hi)] += f[tuple(lo)]
    f = f.reshape(n + 1, size).astype(object)

    # b_r = r * [z^r] log f_Y(z): integral by the recurrence
    b = [None] * (n + 1)
    for r in range(1, n + 1):
        acc = r * f[r]
        for k in range(1, r):
            acc = acc - b[k] * f[r - k]
        b[r] = acc
    signs = np.where((n - pop) & 1, -1, 1).astype(object)
    total = int((signs * b[n]).sum())
    q, rem = divmod(total, n)
    assert rem == 0
    return q


@lru_cache(maxsize=4096)
def _fast_cached(n: int, adj: tuple[int, ...]) -> int:
    return _connected_signed_sum(n, adj)


def ursell_fast(H: SmallGraph) -> Fraction:
    if H.n > FAST_MAX_N:
        raise GraphTooLarge(f"ursell_fast supports n <= {FAST_MAX_N}, got {H.n}")
    if H.n == 0:
        return Fraction(0)
    if H.n == 1:
        return Fraction(1)
    return Fraction(_fast_cached(H.n, H.adj), factorial(H.n))


def ursell(H: SmallGraph) -> Fraction:
    """Default evaluator used by the cluster enumeration."""
    return ursell_fast(H)
