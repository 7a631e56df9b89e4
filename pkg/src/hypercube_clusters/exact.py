"""Exact partition functions of the hard-core model on Q_d for d <= 6.

The workhorse is the bipartite identity
    Z(lambda) = sum_{A subset E} lambda^|A| (1+lambda)^(2^(d-1) - |N(A)|),
stored as a histogram ``hist[s, n]`` = #{A : |A| = s, |N(A)| = n}; the
histogram does not depend on lambda, so one table serves every fugacity.
At d = 6 the 2^32 even subsets are streamed as A1 x A2 over the two halves
of E, vectorised over A2.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from itertools import combinations, product
from math import comb

import mpmath
import numpy as np

from .hypercube import even_vertices, odd_vertices

log = logging.getLogger(__name__)

MAX_EXACT_D = 6
MAX_BRUTE_D = 4


class CapabilityError(ValueError):
    """Requested size is beyond what the exact oracle supports."""


def _side_masks(d: int, side: int = 0) -> tuple[list[int], np.ndarray]:
    """Vertices of one side and, for each, its neighbourhood as a bitmask over the other side's ranks."""
    E = even_vertices(d)
    O = odd_vertices(d)
    if side:
        E, O = O, E
    rank = {v: i for i, v in enumerate(O)}
    nb = np.zeros(len(E), dtype=np.uint64)
    for idx, v in enumerate(E):
        m = 0
        for i in range(d):
            m |= 1 << rank[v ^ (1 << i)]
        nb[idx] = m
    return E, nb


def _subset_tables(nb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For every subset X of the given vertices: OR of neighbourhoods and |X|."""
    n = len(nb)
    nmask = np.zeros(1 << n, dtype=np.uint64)
    size = np.zeros(1 << n, dtype=np.int64)
    for bit in range(n):
        lo = 1 << bit
        nmask[lo:2 * lo] = nmask[:lo] | nb[bit]
        size[lo:2 * lo] = size[:lo] + 1
    return nmask, size


def _hist_chunk(args) -> np.ndarray:
    d, start, stop, side = args
    _, nb = _side_masks(d, side)
    half = len(nb) // 2
    m1, s1 = _subset_tables(nb[:half])
    m2, s2 = _subset_tables(nb[half:])
    width = (1 << (d - 1)) + 1
    hist = np.zeros(width * width, dtype=np.int64)
    base = s2 * width
    for i in range(start, stop):
        n = np.bitwise_count(m2 | m1[i]).astype(np.int64)
        hist += np.bincount(base + (s1[i] * width) + n, minlength=width * width)
    return hist


def neighborhood_histogram(d: int, threads: int = 1, side: int = 0) -> np.ndarray:
    """hist[s, n] = number of A subset E with |A| = s and |N(A)| = n.

    ``side=1`` enumerates subsets of O instead; by symmetry the table is the same.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if d > MAX_EXACT_D:
        raise CapabilityError(f"exact partition function supports d <= {MAX_EXACT_D}")
    width = (1 << (d - 1)) + 1
    if d <= 5:
        _, nb = _side_masks(d, side)
        m, s = _subset_tables(nb)
        n = np.bitwise_count(m).astype(np.int64)
        hist = np.bincount(s * width + n, minlength=width * width)
        return hist.reshape(width, width)
    half = 1 << ((1 << (d - 1)) // 2)
    shards = max(1, threads) * 8
    bounds = np.linspace(0, half, shards + 1).astype(int)
    jobs = [(d, int(a), int(b), side) for a, b in zip(bounds[:-1], bounds[1:])]
    if threads > 1:
        with ProcessPoolExecutor(threads) as ex:
            parts = list(ex.map(_hist_chunk, jobs))
    else:
        parts = []
        for j in jobs:
            parts.append(_hist_chunk(j))
            log.debug("d=%d shard %d/%d done", d, len(parts), len(jobs))
    return np.sum(parts, axis=0).reshape(width, width)


def independence_polynomial(hist: np.ndarray) -> list[int]:
    """Integer coefficients c_i with Z(lambda) = sum_i c_i lambda^i."""
    half = hist.shape[0] - 1
    coeffs = [0] * (2 * half + 1)
    for s, n in zip(*np.nonzero(hist)):
        cnt = int(hist[s, n])
        free = half - int(n)
        for b in range(free + 1):
            coeffs[int(s) + b] += cnt * comb(free, b)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


def z_from_hist(hist: np.ndarray, lam, dps: int = 60):
    """Evaluate the bipartite sum.  Exact for rational lambda, mpmath otherwise."""
    half = hist.shape[0] - 1
    exact = isinstance(lam, (int, Fraction))
    if exact:
        lam = Fraction(lam)
        one = Fraction(1)
    else:
        mpmath.mp.dps = dps
        lam = mpmath.mpf(lam)
        one = mpmath.mpf(1)
    u = one + lam
    total = 0 * one
    for s, n in zip(*np.nonzero(hist)):
        total += int(hist[s, n]) * lam ** int(s) * u ** (half - int(n))
    return total


def exact_Z(d: int, lam, threads: int = 1, hist: np.ndarray | None = None):
    if d > MAX_EXACT_D:
        raise CapabilityError(f"exact_Z supports d <= {MAX_EXACT_D}")
    if hist is None:
        from .cache import load_or_build_histogram

        hist = load_or_build_histogram(d, threads=threads)
    return z_from_hist(hist, lam)


def exact_log_Z(d: int, lam, dps: int = 60, **kw) -> mpmath.mpf:
    mpmath.mp.dps = dps
    z = exact_Z(d, lam, **kw)
    if isinstance(z, Fraction):
        return mpmath.log(mpmath.mpf(z.numerator)) - mpmath.log(mpmath.mpf(z.denominator))
    return mpmath.log(z)


# --- independent oracles ----------------------------------------------------


def brute_force_polynomial(d: int) -> list[int]:
    """Independence polynomial by checking every vertex subset of Q_d (d <= 4)."""
    if d > MAX_BRUTE_D:
        raise CapabilityError(f"all-subsets brute force supports d <= {MAX_BRUTE_D}")
    nv = 1 << d
    edges = [(v, v ^ (1 << i)) for v in range(nv) for i in range(d) if v < v ^ (1 << i)]
    subsets = np.arange(1 << nv, dtype=np.int64)
    ok = np.ones(1 << nv, dtype=bool)
    for v, w in edges:
        both = (1 << v) | (1 << w)
        ok &= (subsets & both) != both
    sizes = np.bitwise_count(subsets[ok])
    return [int(c) for c in np.bincount(sizes)]


def transfer_polynomial(d: int) -> list[int]:
    """Independence polynomial via Q_d = Q_2 x Q_(d-2).

    Independent sets of Q_a x Q_b are assignments of independent sets of Q_b
    to vertices of Q_a that are disjoint across Q_a-edges.  Fix the sets on
    the even vertices of Q_a; each odd vertex then contributes the
    independence polynomial of Q_b restricted to the complement of its
    neighbours' union.  Shares no code with the bipartite histogram.
    """
    if d < 4 or d > MAX_EXACT_D:
        raise CapabilityError("transfer oracle supports 4 <= d <= 6")
    a = 2
    b = d - a
    nb_ = 1 << b
    inner = [m for m in range(1 << nb_)
             if all(not (m >> v & 1 and m >> (v ^ (1 << i)) & 1) for v in range(nb_) for i in range(b))]
    deg = nb_ // 2 + 1
    # W[U] = sum over independent R of Q_b disjoint from U of lambda^|R|
    W = np.zeros((1 << nb_, deg + 1), dtype=np.int64)
    inner_arr = np.array(inner, dtype=np.int64)
    inner_sz = np.bitwise_count(inner_arr).astype(np.int64)
    for U in range(1 << nb_):
        sel = (inner_arr & U) == 0
        W[U] = np.bincount(inner_sz[sel], minlength=deg + 1)[: deg + 1]
    outer_even = even_vertices(a)
    outer_odd = odd_vertices(a)
    epos = {v: i for i, v in enumerate(outer_even)}
    nbrs = [[epos[o ^ (1 << i)] for i in range(a)] for o in outer_odd]
    n_even = len(outer_even)
    total_deg = (1 << d) // 2
    result = np.zeros(total_deg + 1, dtype=np.int64)
    # vectorise over the last even vertex, loop over the rest
    last = inner_arr
    for head in product(range(len(inner)), repeat=n_even - 1):
        sets = [np.full(len(inner), inner[h], dtype=np.int64) for h in head] + [last]
        s = sum(int(inner_sz[h]) for h in head) + inner_sz
        poly = np.zeros((len(inner), 1), dtype=np.int64)
        poly[:, 0] = 1
        for nbr in nbrs:
            U = np.zeros(len(inner), dtype=np.int64)
            for e in nbr:
                U |= sets[e]
            w = W[U]
            new = np.zeros((len(inner), poly.shape[1] + deg), dtype=np.int64)
            for c in range(deg + 1):
                new[:, c:c + poly.shape[1]] += poly * w[:, c:c + 1]
            poly = new
        for sv in np.unique(s):
            rows = s == sv
            acc = poly[rows].sum(axis=0)
            result[sv:sv + len(acc)] += acc[: total_deg + 1 - sv]
    coeffs = [int(c) for c in result]
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


def poly_eval(coeffs: list[int], lam):
    lam = Fraction(lam) if isinstance(lam, (int, Fraction)) else lam
    acc = 0
    for c in reversed(coeffs):
        acc = acc * lam + c
    return acc


def small_subset_histogram(d: int, s_max: int) -> dict[int, dict[int, Fraction]]:
    """hist[s][n] = #{A subset E : |A| = s, |N(A)| = n} for s <= s_max, any d.

    Counts sets through 0 and uses vertex-transitivity: N_s = 2^(d-1)/s * #(A containing 0).
    """
    E = even_vertices(d)
    O = odd_vertices(d)
    rank = {v: i for i, v in enumerate(O)}
    nb = [sum(1 << rank[v ^ (1 << i)] for i in range(d)) for v in E]
    rest = nb[1:]
    out: dict[int, dict[int, Fraction]] = {}
    for s in range(1, s_max + 1):
        cnt: dict[int, int] = {}
        for combo in combinations(rest, s - 1):
            m = nb[0]
            for x in combo:
                m |= x
            n = m.bit_count()
            cnt[n] = cnt.get(n, 0) + 1
        scale = Fraction(len(E), s)
        out[s] = {n: c * scale for n, c in cnt.items()}
    return out


def lk_from_log_series(d: int, lam, k_max: int) -> list[Fraction]:
    """L_1..L_k_max as coefficients of log(sum_A (lam z)^|A| (1+lam)^(-|N(A)|)).

    Distinct 2-linked components of A have disjoint neighbourhoods, so this
    generating function is the polymer partition function graded by size and
    its logarithm is the cluster expansion.  Shares no code with the cluster
    enumeration.
    """
    lam = Fraction(lam)
    u = 1 + lam
    hist = small_subset_histogram(d, k_max)
    a = [Fraction(1)] + [lam**s * sum((c * u ** (-n) for n, c in hist[s].items()), Fraction(0))
                         for s in range(1, k_max + 1)]
    # log of a power series with a[0] = 1: k b_k = k a_k - sum_{i<k} i b_i a_{k-i}
    b = [Fraction(0)] * (k_max + 1)
    for k in range(1, k_max + 1):
        b[k] = a[k] - sum((i * b[i] * a[k - i] for i in range(1, k)), Fraction(0)) / k
    return b[1:]
