"""Canonical 2-linked sets, anchored clusters and symbolic cluster sums L_k.

Every set here contains the zero vertex.  A cluster whose vertex union uses
exactly the coordinates [a] stands for binomial(d, a) coordinate images and
2^(d-1) translates; the translate count over-counts by |V(cluster)|, which
is why each anchored cluster carries the factor 1/j.

With u = 1 + lambda, a polymer S supported on [a] has |N(S)| = (d-a)|S| +
n_local(S), so a cluster of size k has weight
    phi(H) * lambda^k * u^(-dk) * u^(a*k - sum n_local).
The d-dependence is therefore confined to binomial(d, a) and u^(-dk).
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations
from math import comb, factorial, prod
from typing import Iterator

import sympy as sp

from .hypercube import LinkedSet, is_two_linked, local_neighborhood_size
from .ursell import SmallGraph, ursell

K_MAX = 8
# largest k whose canonical set lists fit in a few GB of memory; beyond it the
# size-k lists run to tens of millions of sets
K_FEASIBLE = 5


@dataclass
class CanonicalSetList:
    """All 2-linked sets of size m containing 0, active coordinates within ``coords``."""

    m: int
    coords: int
    entries: list[frozenset[int]]
    index: dict[int, list[frozenset[int]]] = field(default_factory=dict)

    def exact(self, a: int) -> list[frozenset[int]]:
        """Entries whose active set is exactly [a]."""
        return self.index.get((1 << a) - 1, [])

    def __len__(self):
        return len(self.entries)


def _index(entries):
    idx: dict[int, list] = defaultdict(list)
    for S in entries:
        act = 0
        for v in S:
            act |= v
        if act & (act + 1) == 0:  # initial segment
            idx[act].append(S)
    return dict(idx)


def _grow(prev: list[frozenset[int]], coords: int) -> list[frozenset[int]]:
    flips = [(1 << i) | (1 << j) for i, j in combinations(range(coords), 2)]
    out: set[frozenset[int]] = set()
    for S in prev:
        for v in S:
            for f in flips:
                w = v ^ f
                if w not in S:
                    out.add(S | {w})
    return sorted(out, key=lambda s: sorted(s))


def build_set_lists(k_max: int, coords: int | None = None) -> dict[int, CanonicalSetList]:
    """Lists L_1..L_{k_max}, grown one vertex at a time and deduplicated.

    ``coords`` defaults to 2*k_max.  Any set with active set exactly [a]
    appears, since every BFS prefix from 0 stays inside its active set.
    """
    if not 1 <= k_max <= K_MAX:
        raise ValueError(f"k_max must be in 1..{K_MAX}")
    if coords is None:
        coords = 2 * k_max
    return _cached_lists(k_max, coords)


@lru_cache(maxsize=16)
def _cached_lists(k_max: int, coords: int) -> dict[int, CanonicalSetList]:
    lists = {}
    cur = [frozenset({0})]
    for m in range(1, k_max + 1):
        if m > 1:
            cur = _grow(cur, coords)
        lists[m] = CanonicalSetList(m, coords, cur, _index(cur))
    return lists


# --- clusters ---------------------------------------------------------------


def _incompatible(s1: frozenset[int], s2: frozenset[int]) -> bool:
    # same side, so the union is 2-linked iff some pair is at distance 0 or 2
    for x in s1:
        for y in s2:
            if (x ^ y).bit_count() <= 2:
                return True
    return False


def incompatibility_graph(polymers: tuple[frozenset[int], ...]) -> SmallGraph:
    n = len(polymers)
    edges = [(i, j) for i, j in combinations(range(n), 2) if _incompatible(polymers[i], polymers[j])]
    return SmallGraph.from_edges(n, edges)


@dataclass(frozen=True)
class Cluster:
    polymers: tuple[frozenset[int], ...]
    incompat: SmallGraph

    @property
    def size(self) -> int:
        return sum(len(p) for p in self.polymers)

    @property
    def support(self) -> frozenset[int]:
        return frozenset().union(*self.polymers)

    def ursell(self) -> Fraction:
        return ursell(self.incompat)

    def as_linked_sets(self, dim: int | None = None) -> tuple[LinkedSet, ...]:
        return tuple(LinkedSet(p, dim) for p in self.polymers)


def _two_linked_subsets(S: frozenset[int]) -> dict[int, list[frozenset[int]]]:
    pts = sorted(S)
    by_size: dict[int, list[frozenset[int]]] = defaultdict(list)
    for r in range(1, len(pts) + 1):
        for sub in combinations(pts, r):
            if r == 1 or is_two_linked(sub):
                by_size[r].append(frozenset(sub))
    return by_size


def cluster_multisets(S: frozenset[int], k: int) -> Iterator[tuple[tuple[frozenset[int], ...], int, SmallGraph]]:
    """Yield (sorted polymer tuple, number of orderings, incompatibility graph).

    Covers every cluster of total size k whose polymers union to exactly S.
    """
    pool = []
    for r, subs in sorted(_two_linked_subsets(S).items()):
        pool.extend(subs)
    sizes = [len(p) for p in pool]

    def rec(start, remaining, chosen):
        if remaining == 0:
            yield tuple(chosen)
            return
        for i in range(start, len(pool)):
            if sizes[i] <= remaining:
                chosen.append(i)
                yield from rec(i, remaining - sizes[i], chosen)
                chosen.pop()

    for idxs in rec(0, k, []):
        polys = tuple(pool[i] for i in idxs)
        if frozenset().union(*polys) != S:
            continue
        H = incompatibility_graph(polys)
        if not H.is_connected():
            continue
        mult = factorial(len(idxs))
        for i in set(idxs):
            mult //= factorial(idxs.count(i))
        yield polys, mult, H


def enumerate_clusters(j: int, k: int, a: int, lists: dict[int, CanonicalSetList]) -> list[Cluster]:
    """Ordered clusters of size k, |V| = j, active set exactly [a], containing 0."""
    if j > k or a > 2 * k or j not in lists:
        return []
    out = []
    for S in lists[j].exact(a):
        for polys, _mult, H in cluster_multisets(S, k):
            seen = set()
            for perm in permutations(range(len(polys))):
                key = tuple(polys[p] for p in perm)
                if key in seen:
                    continue
                seen.add(key)
                out.append(Cluster(key, incompatibility_graph(key)))
    return out


# --- L_k --------------------------------------------------------------------


@dataclass(frozen=True)
class LkValue:
    """L_k = 2^(d-1) lambda^k u^(-dk) sum_a binom(d, a) P_a(u), u = 1 + lambda.

    ``terms[a]`` maps an integer exponent e to the rational coefficient of u^e
    in P_a.
    """

    k: int
    terms: dict[int, dict[int, Fraction]]

    def P(self, a: int, u):
        return sum((c * u**e for e, c in self.terms.get(a, {}).items()), Fraction(0) if isinstance(u, (int, Fraction)) else 0)

    def evaluate(self, d: int, lam, exact: bool | None = None):
        return evaluate_Lk(self, d, lam, exact=exact)

    def symbolic(self, d: sp.Symbol | None = None, lam: sp.Symbol | None = None) -> sp.Expr:
        d = sp.Symbol("d") if d is None else d
        lam = sp.Symbol("lambda") if lam is None else lam
        u = 1 + lam
        inner = sum(
            (sp.binomial(d, a) * sp.Rational(c.numerator, c.denominator) * u**e
             for a, t in self.terms.items() for e, c in t.items()),
            sp.Integer(0),
        )
        return 2 ** (d - 1) * lam**self.k * u ** (-d * self.k) * inner

    def at_lambda_one(self) -> tuple[sp.Poly, int]:
        """(p, s) with L_k(lambda=1) = p(d) * 2^(s*d), p a rational polynomial in d."""
        d = sp.Symbol("d")
        # u = 2: 2^(d-1) * 2^(-dk) * sum binom(d,a) P_a(2)
        poly = sum(
            (sp.expand_func(sp.binomial(d, a)) * sp.Rational(c.numerator, c.denominator) * sp.Integer(2) ** e
             for a, t in self.terms.items() for e, c in t.items()),
            sp.Integer(0),
        )
        return sp.Poly(sp.expand(poly / 2), d), 1 - self.k

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "normalization": "L_k = 2^(d-1) * lambda^k * (1+lambda)^(-d*k) * sum_a binom(d,a) * sum_e c[a][e] * (1+lambda)^e",
            "terms": {str(a): {str(e): str(c) for e, c in sorted(t.items())} for a, t in sorted(self.terms.items())},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LkValue":
        return cls(int(obj["k"]), {int(a): {int(e): Fraction(c) for e, c in t.items()} for a, t in obj["terms"].items()})


def cluster_sum_terms(k: int, stat=None, lists: dict[int, CanonicalSetList] | None = None) -> dict[int, dict[int, Fraction]]:
    """Anchored sum over clusters of size k, as Laurent coefficients per a.

    ``stat(polymers)`` multiplies each cluster's weight; it must be invariant
    under translations and coordinate permutations.  ``stat=None`` gives L_k.
    """
    if lists is None:
        # sets with active set exactly [a] never need more than 2(k-1) coordinates
        lists = build_set_lists(k, coords=max(2 * (k - 1), 1))
    terms: dict[int, dict[int, Fraction]] = defaultdict(lambda: defaultdict(Fraction))
    for j in range(1, k + 1):
        for a in range(0, 2 * (j - 1) + 1):
            for S in lists[j].exact(a):
                for polys, mult, H in cluster_multisets(S, k):
                    factor = 1 if stat is None else stat(polys)
                    if not factor:
                        continue
                    e = a * k - sum(local_neighborhood_size(p, a) for p in polys)
                    terms[a][e] += Fraction(mult, j) * ursell(H) * factor
    clean = {a: {e: c for e, c in t.items() if c} for a, t in terms.items()}
    return {a: t for a, t in clean.items() if t}


def compute_Lk_symbolic(k: int, lists: dict[int, CanonicalSetList] | None = None) -> LkValue:
    if not 1 <= k <= K_MAX:
        raise ValueError(f"k must be in 1..{K_MAX}")
    if k > K_FEASIBLE and lists is None:
        from .exact import CapabilityError

        raise CapabilityError(f"symbolic L_k is supported for k <= {K_FEASIBLE} on this implementation")
    return LkValue(k, cluster_sum_terms(k, None, lists))


def evaluate_Lk(v: LkValue, d: int, lam, exact: bool | None = None):
    """Numeric L_k at concrete (d, lambda).

    Exact Fraction arithmetic when lambda is rational (or ``exact=True``);
    otherwise float, raising OverflowError if the float path overflows.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if exact is None:
        exact = isinstance(lam, (int, Fraction))
    if exact:
        lam = Fraction(lam)
        u = 1 + lam
        inner = sum((comb(d, a) * c * u**e for a, t in v.terms.items() for e, c in t.items()), Fraction(0))
        return Fraction(2) ** (d - 1) * lam**v.k * u ** (-d * v.k) * inner
    lam = float(lam)
    u = 1.0 + lam
    import math

    try:
        logpref = (d - 1) * math.log(2) + v.k * math.log(lam) - d * v.k * math.log(u)
        inner = sum(comb(d, a) * float(c) * u**e for a, t in v.terms.items() for e, c in t.items())
        return math.exp(logpref) * inner
    except OverflowError as exc:
        raise OverflowError("float evaluation of L_k overflowed; retry in exact mode") from exc


def canonical_counts(m: int, coords: int | None = None) -> dict[int, int]:
    """Number of canonical sets of size m with active set exactly [a], keyed by a."""
    lists = build_set_lists(m, coords)
    return {a: len(lists[m].exact(a)) for a in range(0, 2 * m + 1) if lists[m].exact(a)}


# --- concrete-d oracle ------------------------------------------------------


def concrete_sets(m_max: int, d: int) -> dict[int, list[frozenset[int]]]:
    """2-linked sets of size <= m_max containing 0 in Q_d itself."""
    flips = [(1 << i) | (1 << j) for i, j in combinations(range(d), 2)]
    out = {1: [frozenset({0})]}
    cur = {frozenset({0})}
    for m in range(2, m_max + 1):
        cur = {S | {v ^ f} for S in cur for v in S for f in flips if v ^ f not in S}
        out[m] = list(cur)
    return out


def concrete_Lk(k: int, d: int, lam) -> Fraction:
    """L_k at a concrete d by summing cluster weights in Q_d directly.

    Neighbourhoods are taken in Q_d; no coordinate canonicalisation or
    binomial transfer is used.  Each cluster is met once per vertex of its
    support, hence the 1/j.
    """
    from .hypercube import neighborhood_size

    lam = Fraction(lam)
    u = 1 + lam
    sets = concrete_sets(k, d)
    total = Fraction(0)
    for j in range(1, k + 1):
        for S in sets[j]:
            for polys, mult, H in cluster_multisets(S, k):
                w = prod((u ** -neighborhood_size(p, d) for p in polys), start=Fraction(1))
                total += Fraction(mult, j) * ursell(H) * w
    return 2 ** (d - 1) * lam**k * total
