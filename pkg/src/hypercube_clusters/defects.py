"""Defect types: isomorphism classes of the distance-2 graph of a 2-linked set.

Counts are anchored at the zero vertex: n_T = 2^(d-1) n_{T,0} / t, and
n_{T,0} = sum_a binom(d, a) c_a where c_a counts canonical sets of type T
using exactly the coordinates [a].
"""
from __future__ import annotations

import csv
import io
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations, product
from math import comb, factorial
from typing import Iterable

import sympy as sp

from .clusters import build_set_lists, cluster_multisets, cluster_sum_terms, LkValue
from .hypercube import ModelParams, components_bits, local_neighborhood_size, neighborhood_size_embedded, parity, Vertex
from .ursell import ursell

MAX_CANON_T = 7


# --- canonical forms --------------------------------------------------------


def square_graph_adj(members: Iterable[int]) -> tuple[int, ...]:
    pts = sorted(members)
    n = len(pts)
    adj = [0] * n
    for i, j in combinations(range(n), 2):
        if (pts[i] ^ pts[j]).bit_count() == 2:
            adj[i] |= 1 << j
            adj[j] |= 1 << i
    return tuple(adj)


def _code(adj: tuple[int, ...], order: tuple[int, ...]) -> int:
    n = len(order)
    code = 0
    bit = 0
    for i in range(n):
        ai = adj[order[i]]
        for j in range(i + 1, n):
            if ai >> order[j] & 1:
                code |= 1 << bit
            bit += 1
    return code


@lru_cache(maxsize=1 << 16)
def canonical_code(adj: tuple[int, ...]) -> int:
    """Smallest upper-triangle edge code over degree-respecting relabelings.

    Vertices are first grouped by degree (descending); only permutations
    inside each group are tried, which is still a complete invariant.
    """
    n = len(adj)
    if n > MAX_CANON_T:
        raise ValueError(f"canonical forms are computed for t <= {MAX_CANON_T}")
    deg = [a.bit_count() for a in adj]
    groups = defaultdict(list)
    for v in range(n):
        groups[-deg[v]].append(v)
    blocks = [groups[k] for k in sorted(groups)]
    best = None
    for parts in product(*(permutations(b) for b in blocks)):
        order = tuple(v for p in parts for v in p)
        c = _code(adj, order)
        if best is None or c < best:
            best = c
    return best


def canonical_code_bruteforce(adj: tuple[int, ...]) -> int:
    return min(_code(adj, p) for p in permutations(range(len(adj))))


def code_to_edges(t: int, code: int) -> list[tuple[int, int]]:
    pairs = list(combinations(range(t), 2))
    return [pairs[b] for b in range(len(pairs)) if code >> b & 1]


def type_id(t: int, code: int) -> str:
    return f"T{t}.{code:x}"


@dataclass(frozen=True)
class DefectType:
    t: int
    code: int
    witness: frozenset[int]  # canonical set containing 0 with active set [a]

    @property
    def id(self) -> str:
        return type_id(self.t, self.code)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return code_to_edges(self.t, self.code)

    @property
    def is_tree(self) -> bool:
        return len(self.edges) == self.t - 1

    @property
    def aut_count(self) -> int:
        return automorphism_count(self.t, self.edges)

    @property
    def c_T(self) -> Fraction | None:
        """Leading constant 2^-t / |Aut(T)| of n_T / (2^d d^(2t-2)), trees only."""
        if not self.is_tree:
            return None
        return Fraction(1, 2**self.t * self.aut_count)

    @property
    def neighborhood_form(self) -> tuple[int, int]:
        """(alpha, beta) with |N(S)| = alpha*d + beta for any S of this type."""
        return neighborhood_size_embedded(self.witness)


def automorphism_count(t: int, edges: list[tuple[int, int]]) -> int:
    es = {frozenset(e) for e in edges}
    return sum(1 for p in permutations(range(t)) if {frozenset((p[i], p[j])) for i, j in edges} == es)


def type_of(members: Iterable[int]) -> tuple[int, int]:
    ms = list(members)
    return len(ms), canonical_code(square_graph_adj(ms))


def _orbit_representatives(t: int) -> list[frozenset[int]]:
    """2-linked sets containing 0, one or more per coordinate-permutation orbit.

    New coordinates are only ever introduced in order, so active sets stay
    initial segments and the growth is much smaller than the full lists.
    """
    cur = {frozenset({0})}
    for _ in range(t - 1):
        nxt = set()
        for S in cur:
            a = 0
            for v in S:
                a |= v
            a = a.bit_length()
            flips = [(1 << i) | (1 << j) for i, j in combinations(range(a), 2)]
            flips += [(1 << i) | (1 << a) for i in range(a)]
            flips.append((1 << a) | (1 << (a + 1)))
            for v in S:
                for f in flips:
                    w = v ^ f
                    if w not in S:
                        nxt.add(S | {w})
        cur = nxt
    return sorted(cur, key=lambda s: (max(s).bit_length(), sorted(s)))


def enumerate_defect_types(t: int) -> list[DefectType]:
    """All types of size t realisable in Q_d^2 for d >= 2(t-1), with witnesses."""
    if not 1 <= t <= 6:
        raise ValueError("defect types are enumerated for 1 <= t <= 6")
    found: dict[int, frozenset[int]] = {}
    for S in _orbit_representatives(t):
        code = canonical_code(square_graph_adj(S))
        if code not in found:
            found[code] = S
    return [DefectType(t, c, found[c]) for c in sorted(found)]


# --- counts and weights ------------------------------------------------------


@dataclass(frozen=True)
class TypeCount:
    """n_T = 2^(d-1)/t * sum_a binom(d, a) * anchored[a]."""

    t: int
    anchored: dict[int, int]

    def at(self, d: int) -> Fraction:
        tot = sum(comb(d, a) * c for a, c in self.anchored.items())
        return Fraction(2 ** (d - 1) * tot, self.t)

    def symbolic(self, d: sp.Symbol | None = None) -> sp.Expr:
        d = sp.Symbol("d") if d is None else d
        poly = sum((sp.expand_func(sp.binomial(d, a)) * c for a, c in self.anchored.items()), sp.Integer(0))
        return 2 ** (d - 1) * sp.expand(poly) / self.t

    def poly_over_2d(self) -> sp.Poly:
        """n_T / 2^d as a polynomial in d."""
        d = sp.Symbol("d")
        poly = sum((sp.expand_func(sp.binomial(d, a)) * c for a, c in self.anchored.items()), sp.Integer(0))
        return sp.Poly(sp.expand(poly / (2 * self.t)), d)


def count_nT(T: DefectType) -> TypeCount:
    if T.t > 5:
        raise ValueError("count_nT supports t <= 5")
    lists = build_set_lists(T.t, coords=max(2 * (T.t - 1), 1))
    anchored: dict[int, int] = {}
    for a in range(0, 2 * (T.t - 1) + 1):
        c = sum(1 for S in lists[T.t].exact(a) if canonical_code(square_graph_adj(S)) == T.code)
        if c:
            anchored[a] = c
    return TypeCount(T.t, anchored)


@dataclass(frozen=True)
class DefectStats:
    T: DefectType
    nT: TypeCount

    @property
    def weight_form(self) -> tuple[int, int]:
        """w_T = lambda^t (1+lambda)^-(alpha d + beta)."""
        return self.T.neighborhood_form

    def wT(self, d: int, lam):
        alpha, beta = self.weight_form
        lam = Fraction(lam) if isinstance(lam, (int, Fraction)) else float(lam)
        return lam**self.T.t * (1 + lam) ** (-(alpha * d + beta))

    def mT(self, d: int, lam):
        """Mean estimate n_T w_T; the variance estimate is the same number."""
        return self.nT.at(d) * self.wT(d, lam)

    sigmaT2 = mT

    def to_json(self, d: int, lam) -> dict:
        alpha, beta = self.weight_form
        return {
            "type_id": self.T.id, "t": self.T.t, "is_tree": self.T.is_tree,
            "aut": self.T.aut_count, "edges": self.T.edges,
            "nT": str(self.nT.at(d)), "nT_symbolic": str(self.nT.symbolic()),
            "wT_form": f"lambda^{self.T.t} * (1+lambda)^-({alpha}*d + {beta})",
            "wT": str(self.wT(d, lam)), "mT": str(self.mT(d, lam)), "sigmaT2": str(self.sigmaT2(d, lam)),
        }


def defect_stats(t: int) -> list[DefectStats]:
    return [DefectStats(T, count_nT(T)) for T in enumerate_defect_types(t)]


@dataclass
class ClusterType:
    """Clusters sharing polymer types and incompatibility graph.

    Their number is 2^(d-1) * sum_a binom(d, a) * anchored[a]; each has
    Ursell factor ``phi`` and weight lambda^k (1+lambda)^(-dk + offset).
    """

    polymer_types: tuple[str, ...]
    graph_code: int
    phi: Fraction
    offset: int
    anchored: dict[int, Fraction] = field(default_factory=dict)

    def at(self, d: int) -> Fraction:
        return 2 ** (d - 1) * sum((comb(d, a) * c for a, c in self.anchored.items()), Fraction(0))

    def symbolic(self, d: sp.Symbol | None = None) -> sp.Expr:
        d = sp.Symbol("d") if d is None else d
        poly = sum((sp.expand_func(sp.binomial(d, a)) * sp.Rational(c.numerator, c.denominator)
                    for a, c in self.anchored.items()), sp.Integer(0))
        return 2 ** (d - 1) * sp.expand(poly)


def cluster_type_census(k: int) -> list[ClusterType]:
    """Group the ordered clusters of size k by polymer types and incompatibility graph."""
    if not 1 <= k <= 4:
        raise ValueError("cluster_type_census supports 1 <= k <= 4")
    lists = build_set_lists(k, coords=max(2 * (k - 1), 1))
    out: dict[tuple, ClusterType] = {}
    for j in range(1, k + 1):
        for a in range(0, 2 * (j - 1) + 1):
            for S in lists[j].exact(a):
                for polys, mult, H in cluster_multisets(S, k):
                    ptypes = tuple(sorted(type_id(*type_of(p)) for p in polys))
                    key = (ptypes, canonical_code(H.adj))
                    offset = a * k - sum(local_neighborhood_size(p, a) for p in polys)
                    phi = ursell(H)
                    ct = out.get(key)
                    if ct is None:
                        ct = out[key] = ClusterType(ptypes, key[1], phi, offset)
                    if ct.phi != phi or ct.offset != offset:
                        raise AssertionError(f"cluster type {key} is not homogeneous")
                    ct.anchored[a] = ct.anchored.get(a, Fraction(0)) + Fraction(mult, j)
    return sorted(out.values(), key=lambda c: (c.polymer_types, c.graph_code))


# --- trees -------------------------------------------------------------------


def prufer_to_edges(seq: tuple[int, ...], n: int) -> list[tuple[int, int]]:
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = min(i for i in range(n) if degree[i] == 1)
        edges.append((leaf, x))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = [i for i in range(n) if degree[i] == 1]
    edges.append((u, v))
    return edges


def _tree_canon(n: int, edges: list[tuple[int, int]]) -> str:
    """AHU encoding rooted at the centre (min over the two centres if bicentral)."""
    if n == 1:
        return "()"
    nb = defaultdict(list)
    for u, v in edges:
        nb[u].append(v)
        nb[v].append(u)
    deg = {v: len(nb[v]) for v in range(n)}
    layer = [v for v in range(n) if deg[v] == 1]
    remaining = n
    while remaining > 2:
        remaining -= len(layer)
        nxt = []
        for v in layer:
            for w in nb[v]:
                deg[w] -= 1
                if deg[w] == 1:
                    nxt.append(w)
        layer = nxt
    centres = layer

    def enc(v, parent):
        return "(" + "".join(sorted(enc(w, v) for w in nb[v] if w != parent)) + ")"

    return min(enc(c, -1) for c in centres)


def tree_catalog(t: int) -> list[tuple[str, list[tuple[int, int]], int]]:
    """(canonical string, representative edges, |Aut|) for each unlabeled tree on t vertices.

    Labeled copies are counted over all t^(t-2) Pruefer sequences, and
    |Aut(T)| = t! / #labeled copies.
    """
    if not 1 <= t <= 8:
        raise ValueError("tree catalog supports 1 <= t <= 8")
    if t == 1:
        return [("()", [], 1)]
    counts: Counter[str] = Counter()
    rep: dict[str, list] = {}
    for seq in product(range(t), repeat=t - 2):
        edges = prufer_to_edges(seq, t)
        key = _tree_canon(t, edges)
        counts[key] += 1
        rep.setdefault(key, edges)
    return [(k, rep[k], factorial(t) // counts[k]) for k in sorted(counts)]


def inverse_aut_sum(t: int) -> Fraction:
    return sum((Fraction(1, aut) for _, _, aut in tree_catalog(t)), Fraction(0))


# --- thresholds --------------------------------------------------------------


def threshold_lambda_t(d: int, t: int, s: float = 0.0) -> float:
    if t < 1 or d < 2:
        raise ValueError("need t >= 1 and d >= 2")
    return 2 ** (1 / t) - 1 + 2 ** (1 + 1 / t) * (t - 1) * math.log(d) / (t * d) + s / d


def poisson_mean(t: int, s: float) -> float:
    """Limiting Poisson mean of the number of size-t minority components at lambda_t(d)."""
    if not 1 <= t <= 8:
        raise ValueError("poisson_mean supports 1 <= t <= 8")
    r = 2 ** (1 / t)
    return math.exp(-s * t / r) * 2 ** (2 - 2 / t - t) * (r - 1) ** t * float(inverse_aut_sum(t))


# --- cumulants ---------------------------------------------------------------


def cumulant_terms(T: DefectType, k: int, size: int) -> LkValue:
    """Cluster sum of w(Gamma) * Y_T(Gamma)^k over clusters of the given size."""

    def stat(polys):
        y = sum(1 for p in polys if len(p) == T.t and canonical_code(square_graph_adj(p)) == T.code)
        return y**k

    return LkValue(size, cluster_sum_terms(size, stat))


def cumulant_estimate(T: DefectType, k: int, K_max: int, params: ModelParams):
    """k-th cumulant of X_T from clusters of size <= K_max (exact for rational lambda)."""
    if K_max > 6:
        raise ValueError("K_max must be <= 6")
    if params.d is None:
        raise ValueError("cumulant_estimate needs a concrete d")
    total = Fraction(0) if params.exact else 0.0
    for size in range(T.t, K_max + 1):
        total += cumulant_terms(T, k, size).evaluate(params.d, params.lam)
    return total


# --- census ------------------------------------------------------------------


@dataclass
class DefectCensus:
    t_max: int
    counts: Counter = field(default_factory=Counter)  # type id -> number of components
    sizes: dict[str, int] = field(default_factory=dict)
    oversize: int = 0
    oversize_mass: int = 0
    side: int | None = None

    def key(self) -> tuple:
        return tuple(sorted(self.counts.items())) + (("oversize", self.oversize),)

    def total_mass(self) -> int:
        return sum(self.sizes[k] * c for k, c in self.counts.items()) + self.oversize_mass

    def count_size(self, t: int) -> int:
        return sum(c for k, c in self.counts.items() if self.sizes[k] == t)

    def to_rows(self) -> list[tuple[str, int, int]]:
        rows = [(k, self.sizes[k], c) for k, c in sorted(self.counts.items())]
        if self.oversize:
            rows.append(("oversize", self.oversize_mass, self.oversize))
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["type_id", "size", "count"])
        w.writerows(self.to_rows())
        return buf.getvalue()


def minority_side(I: Iterable[int]) -> int:
    """0 (even) if |E cap I| < |O cap I|, else 1: ties make the even side the majority."""
    ne = no = 0
    for v in I:
        if parity(v):
            no += 1
        else:
            ne += 1
    return 0 if ne < no else 1


def classify_components(I: Iterable[int | Vertex], side: int | str = "minority", t_max: int = 4) -> DefectCensus:
    pts = [v.bits if isinstance(v, Vertex) else v for v in I]
    if side == "minority":
        side = minority_side(pts)
    on_side = [v for v in pts if parity(v) == side]
    census = DefectCensus(t_max, side=side)
    for comp in components_bits(on_side):
        t = len(comp)
        if t > t_max:
            census.oversize += 1
            census.oversize_mass += t
            continue
        tid = type_id(*type_of(comp))
        census.counts[tid] += 1
        census.sizes[tid] = t
    return census
