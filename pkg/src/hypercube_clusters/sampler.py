"""Ground truth at small d: exact census distributions and samplers.

Conventions at d <= 5: even vertices are indexed by their rank in
``even_vertices(d)``; odd vertex i is ``E[i] ^ 1``, so an odd subset's index
mask is also the index mask of its image under the automorphism x -> x ^ e_1.
That automorphism preserves defect types, which lets one census table over
even subsets serve both sides.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numba
import numpy as np
from scipy import stats

from .defects import DefectCensus, canonical_code, classify_components, type_id
from .exact import CapabilityError
from .hypercube import even_vertices

MAX_DIST_D = 5
MAX_GLAUBER_D = 16


# --- census tables -----------------------------------------------------------


@dataclass
class SideTables:
    d: int
    E: list[int]
    nbmask: np.ndarray  # per even index: neighbourhood as odd-index mask
    sizes: np.ndarray  # |A| per subset index
    nsize: np.ndarray  # |N(A)| per subset index
    census_id: np.ndarray  # per subset index: position in ``keys``
    keys: list[tuple]
    t_max: int


def _components_idx(mask: int, sq: list[int]) -> list[int]:
    out = []
    while mask:
        seed = mask & -mask
        comp = seed
        frontier = seed
        while frontier:
            nxt = 0
            f = frontier
            while f:
                low = f & -f
                nxt |= sq[low.bit_length() - 1]
                f ^= low
            frontier = nxt & mask & ~comp
            comp |= frontier
        out.append(comp)
        mask &= ~comp
    return out


@lru_cache(maxsize=32)
def side_tables(d: int, t_max: int = 4) -> SideTables:
    if d > MAX_DIST_D:
        raise CapabilityError(f"census tables support d <= {MAX_DIST_D}")
    E = even_vertices(d)
    n = len(E)
    sq = [sum(1 << j for j in range(n) if (E[i] ^ E[j]).bit_count() == 2) for i in range(n)]
    nbm = np.zeros(n, dtype=np.uint64)
    for i, v in enumerate(E):
        m = 0
        for b in range(d):
            m |= 1 << E.index((v ^ (1 << b)) ^ 1)
        nbm[i] = m
    size = 1 << n
    nmask = np.zeros(size, dtype=np.uint64)
    sizes = np.zeros(size, dtype=np.int64)
    for bit in range(n):
        lo = 1 << bit
        nmask[lo:2 * lo] = nmask[:lo] | nbm[bit]
        sizes[lo:2 * lo] = sizes[:lo] + 1
    nsize = np.bitwise_count(nmask).astype(np.int64)

    key_pos: dict[tuple, int] = {}
    keys: list[tuple] = []
    census_id = np.zeros(size, dtype=np.int64)
    code_cache: dict[int, str] = {}
    for A in range(size):
        counts: Counter = Counter()
        over = 0
        for comp in _components_idx(A, sq):
            t = comp.bit_count()
            if t > t_max:
                over += 1
                continue
            tid = code_cache.get(comp)
            if tid is None:
                pts = [E[i] for i in range(n) if comp >> i & 1]
                from .defects import square_graph_adj

                tid = type_id(t, canonical_code(square_graph_adj(pts)))
                code_cache[comp] = tid
            counts[tid] += 1
        key = tuple(sorted(counts.items())) + (("oversize", over),)
        pos = key_pos.get(key)
        if pos is None:
            pos = key_pos[key] = len(keys)
            keys.append(key)
        census_id[A] = pos
    return SideTables(d, E, nbm, sizes, nsize, census_id, keys, t_max)


def census_count(key: tuple, tid: str) -> int:
    return dict(key).get(tid, 0)


def key_size_count(key: tuple, t: int) -> int:
    """Number of size-t components recorded in a census key."""
    return sum(c for k, c in key if k != "oversize" and int(k[1:].split(".")[0]) == t)


# --- exact distribution ------------------------------------------------------


def exact_defect_distribution(d: int, lam, t_max: int = 4) -> dict[tuple, Fraction | float]:
    """Exact law of the minority-side census.

    For each A = I cap E, the odd side B is a uniform-weight subset of the M
    unblocked odd vertices.  When |A| < |B| the even side is the minority and
    the census is that of A.  Otherwise the odd side is the minority (ties
    included); summing over B with |A| >= |B| and mapping B to the even side
    by x -> x ^ e_1 turns it into the same table lookup.
    """
    if d > MAX_DIST_D:
        raise CapabilityError(f"exact_defect_distribution supports d <= {MAX_DIST_D}")
    tab = side_tables(d, t_max)
    half = len(tab.E)
    exact = isinstance(lam, (int, Fraction))
    lam = Fraction(lam) if exact else float(lam)
    pw = [lam**i for i in range(half + 1)]
    # tail[M][s] = sum_{b > s} C(M, b) lam^b ; tail_eq adds b = s
    above = {}
    for M in range(half + 1):
        row = [comb(M, b) * pw[b] for b in range(M + 1)]
        suffix = [0] * (M + 2)
        for b in range(M, -1, -1):
            suffix[b] = suffix[b + 1] + row[b]
        above[M] = suffix
    weight = Counter()
    for s, nn, cid in zip(tab.sizes.tolist(), tab.nsize.tolist(), tab.census_id.tolist()):
        M = half - nn
        suf = above[M]
        gt = suf[s + 1] if s + 1 <= M + 1 else 0
        ge = suf[s] if s <= M + 1 else 0
        weight[cid] += pw[s] * (gt + ge)
    Z = sum(weight.values())
    return {tab.keys[c]: w / Z for c, w in weight.items()}


def marginal_size_count(dist: dict[tuple, object], t: int) -> dict[int, object]:
    out: Counter = Counter()
    for key, p in dist.items():
        out[key_size_count(key, t)] += p
    return dict(out)


# --- exact sampler -----------------------------------------------------------


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; ``spawn`` gives independent, reproducible child streams."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


@dataclass
class ExactSample:
    d: int
    A: np.ndarray  # even-index masks
    B: np.ndarray  # odd-index masks

    def independent_sets(self) -> list[frozenset[int]]:
        E = even_vertices(self.d)
        out = []
        for a, b in zip(self.A.tolist(), self.B.tolist()):
            s = {E[i] for i in range(len(E)) if a >> i & 1}
            s |= {E[i] ^ 1 for i in range(len(E)) if b >> i & 1}
            out.append(frozenset(s))
        return out

    def vertex_masks(self) -> np.ndarray:
        E = even_vertices(self.d)
        out = np.zeros(len(self.A), dtype=np.uint64)
        for i, v in enumerate(E):
            out |= ((self.A >> np.uint64(i)) & np.uint64(1)) << np.uint64(v)
            out |= ((self.B >> np.uint64(i)) & np.uint64(1)) << np.uint64(v ^ 1)
        return out


def exact_sample(d: int, lam, n: int, seed) -> ExactSample:
    """i.i.d. draws from the hard-core measure: A from its exact marginal, then B given A."""
    if d > MAX_DIST_D:
        raise CapabilityError(f"exact_sample supports d <= {MAX_DIST_D}")
    tab = side_tables(d)
    half = len(tab.E)
    lamf = float(lam)
    logw = tab.sizes * np.log(lamf) + (half - tab.nsize) * np.log1p(lamf)
    w = np.exp(logw - logw.max())
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    rng = make_rng(seed)
    A = np.searchsorted(cdf, rng.random(n), side="right").astype(np.uint64)
    A = np.minimum(A, np.uint64(len(cdf) - 1))
    free = ~tab_nmask(tab)[A.astype(np.int64)] & np.uint64((1 << half) - 1)
    p = lamf / (1 + lamf)
    bits = rng.random((n, half)) < p
    B = np.zeros(n, dtype=np.uint64)
    for i in range(half):
        B |= bits[:, i].astype(np.uint64) << np.uint64(i)
    B &= free
    return ExactSample(d, A, B)


@lru_cache(maxsize=8)
def _nmask_cached(d: int) -> np.ndarray:
    tab = side_tables(d)
    n = len(tab.E)
    nmask = np.zeros(1 << n, dtype=np.uint64)
    for bit in range(n):
        lo = 1 << bit
        nmask[lo:2 * lo] = nmask[:lo] | tab.nbmask[bit]
    return nmask


def tab_nmask(tab: SideTables) -> np.ndarray:
    return _nmask_cached(tab.d)


def sample_census_keys(sample: ExactSample, t_max: int = 4) -> list[tuple]:
    tab = side_tables(sample.d, t_max)
    sa = np.bitwise_count(sample.A).astype(np.int64)
    sb = np.bitwise_count(sample.B).astype(np.int64)
    src = np.where(sa < sb, sample.A, sample.B).astype(np.int64)
    ids = tab.census_id[src]
    return [tab.keys[i] for i in ids.tolist()]


# --- Glauber dynamics --------------------------------------------------------


def heat_bath_probs(lam) -> tuple:
    """(P(occupy), P(vacate)) for an unblocked site; their ratio is lambda."""
    lam = Fraction(lam) if isinstance(lam, (int, Fraction)) else float(lam)
    return lam / (1 + lam), 1 / (1 + lam)


@numba.njit(cache=True)
def _heat_bath(occ, nbr, sites, us, p):
    d = nbr.shape[1]
    for i in range(sites.shape[0]):
        v = sites[i]
        blocked = False
        for j in range(d):
            if occ[nbr[v, j]]:
                blocked = True
                break
        if blocked:
            occ[v] = 0
        elif us[i] < p:
            occ[v] = 1
        else:
            occ[v] = 0


@dataclass
class ChainState:
    d: int
    occ: np.ndarray  # uint8 per vertex
    step: int
    rng: np.random.Generator

    def occupied(self) -> list[int]:
        return np.flatnonzero(self.occ).tolist()

    def is_independent(self) -> bool:
        nbr = _nbr_table(self.d)
        return not bool((self.occ[:, None] & self.occ[nbr]).any())


@lru_cache(maxsize=32)
def _nbr_table(d: int) -> np.ndarray:
    v = np.arange(1 << d, dtype=np.int64)
    return np.stack([v ^ (1 << i) for i in range(d)], axis=1)


def glauber_chain(d: int, lam, seed, n_snapshots: int, interval: int = 1, burn_in: int | None = None,
                  init: str = "odd", debug: bool = False):
    """Yield chain states every ``interval`` sweeps after ``burn_in`` sweeps.

    A sweep is 2^d single-site heat-bath updates.  ``init`` is ``"odd"``
    (all odd vertices occupied) or ``"empty"``.  The default burn-in is
    50 * 2^d sweeps.  At large d the chain stays in the phase it starts in.
    """
    if d > MAX_GLAUBER_D:
        raise CapabilityError(f"glauber_chain supports d <= {MAX_GLAUBER_D}")
    N = 1 << d
    nbr = _nbr_table(d)
    occ = np.zeros(N, dtype=np.uint8)
    if init == "odd":
        occ[np.bitwise_count(np.arange(N)) & 1 == 1] = 1
    elif init != "empty":
        raise ValueError("init must be 'odd' or 'empty'")
    rng = make_rng(seed)
    p = float(lam) / (1 + float(lam))
    if burn_in is None:
        burn_in = 50 * N
    step = 0

    def run(sweeps):
        nonlocal step
        total = sweeps * N
        chunk = 1 << 20
        while total > 0:
            m = min(chunk, total)
            _heat_bath(occ, nbr, rng.integers(0, N, size=m), rng.random(m), p)
            total -= m
            step += m

    run(burn_in)
    for _ in range(n_snapshots):
        run(interval)
        state = ChainState(d, occ.copy(), step, rng)
        if debug and not state.is_independent():
            raise AssertionError("chain left the independent sets")
        yield state


def glauber_census(d: int, lam, n_snapshots: int, seed, t_max: int = 4, **kw) -> list[tuple]:
    """Minority-side census keys of chain snapshots."""
    out = []
    if d <= MAX_DIST_D:
        tab = side_tables(d, t_max)
        E = np.array(tab.E)
        for st in glauber_chain(d, lam, seed, n_snapshots, **kw):
            a = int((st.occ[E].astype(np.int64) << np.arange(len(E))).sum())
            b = int((st.occ[E ^ 1].astype(np.int64) << np.arange(len(E))).sum())
            src = a if a.bit_count() < b.bit_count() else b
            out.append(tab.keys[tab.census_id[src]])
        return out
    for st in glauber_chain(d, lam, seed, n_snapshots, **kw):
        out.append(classify_components(st.occupied(), "minority", t_max).key())
    return out


# --- goodness of fit ---------------------------------------------------------


class InsufficientSamples(ValueError):
    pass


@dataclass
class GofResult:
    statistic: float
    dof: int
    p_value: float
    n: int
    bins: list

    def to_json(self) -> dict:
        return {"statistic": self.statistic, "dof": self.dof, "p_value": self.p_value, "n": self.n,
                "bins": len(self.bins)}


def _pool(expected: list[tuple[object, float]], min_expected: float) -> list[list]:
    """Group outcomes so that every bin has expected count >= min_expected."""
    bins: list[list] = []
    cur: list = []
    acc = 0.0
    for outcome, e in expected:
        cur.append(outcome)
        acc += e
        if acc >= min_expected:
            bins.append(cur)
            cur, acc = [], 0.0
    if cur:
        if bins:
            bins[-1].extend(cur)
        else:
            bins.append(cur)
    return bins


def goodness_of_fit(empirical: dict, model, min_samples: int = 1000, min_expected: float = 5.0) -> GofResult:
    """Pearson chi-square test with pooled sparse bins.

    ``model`` is either ``("poisson", rho)`` for integer outcomes or a mapping
    outcome -> probability.  Outcomes seen but absent from the model fall in
    the last (tail) bin.
    """
    n = sum(empirical.values())
    if n < min_samples:
        raise InsufficientSamples(f"need at least {min_samples} samples, got {n}")
    if isinstance(model, tuple) and model[0] == "poisson":
        rho = float(model[1])
        hi = max(max(empirical), int(rho + 10 * rho**0.5 + 10))
        probs = {k: float(stats.poisson.pmf(k, rho)) for k in range(hi + 1)}
        ordered = sorted(probs.items())
    else:
        probs = {k: float(v) for k, v in model.items()}
        ordered = sorted(probs.items(), key=lambda kv: -kv[1])
    bins = _pool([(k, p * n) for k, p in ordered], min_expected)
    # the last bin absorbs the unlisted tail
    listed = set(probs)
    stray = sum(c for k, c in empirical.items() if k not in listed or probs[k] == 0)
    if stray and 1.0 - sum(probs.values()) <= 1e-12:
        # an outcome the model calls impossible
        return GofResult(math.inf, max(len(bins) - 1, 1), 0.0, n, bins)
    obs, exp = [], []
    for i, b in enumerate(bins):
        o = sum(empirical.get(k, 0) for k in b)
        e = sum(probs[k] for k in b) * n
        if i == len(bins) - 1:
            o += stray
            e += max(0.0, 1.0 - sum(probs.values())) * n
        obs.append(o)
        exp.append(e)
    obs_a, exp_a = np.array(obs, float), np.array(exp, float)
    stat = float(((obs_a - exp_a) ** 2 / exp_a).sum())
    dof = max(len(bins) - 1, 1)
    return GofResult(stat, dof, float(stats.chi2.sf(stat, dof)), n, bins)


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(float(p.get(k, 0)) - float(q.get(k, 0))) for k in keys)


def empirical(keys) -> dict:
    return dict(Counter(keys))
