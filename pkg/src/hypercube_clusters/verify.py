"""Acceptance checks, shared by ``hypercube-clusters verify`` and the test suite.

Each check returns a ``CheckResult``; nothing here raises on a failed
comparison, so one bad criterion never hides the others.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable

import mpmath
import sympy as sp

from . import ursell as U
from .cache import load_or_build_lk
from .clusters import concrete_Lk, evaluate_Lk
from .defects import (canonical_code, cluster_type_census, count_nT, defect_stats, enumerate_defect_types,
                      poisson_mean, threshold_lambda_t)
from .exact import brute_force_polynomial, exact_log_Z, exact_Z, transfer_polynomial
from .expansion import approx_log_Z, series_coefficients
from .hypercube import ModelParams
from .sampler import (empirical, exact_defect_distribution, exact_sample, glauber_census, goodness_of_fit,
                      marginal_size_count, sample_census_keys, total_variation)

# regression constants, frozen from the exact oracle (cross-checked by the transfer oracle)
I_Q5 = 254475
I_Q6 = 19768832143


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


_d, _lam = sp.symbols("d lambda")


def _bracket(k: int) -> sp.Expr:
    """L_k / (2^d lambda^k (1+lambda)^(-dk)) as a polynomial in d and lambda."""
    v = load_or_build_lk(k)
    u = 1 + _lam
    body = sum((sp.expand_func(sp.binomial(_d, a)) * sp.Rational(c.numerator, c.denominator) * u**e
                for a, t in v.terms.items() for e, c in t.items()), sp.Integer(0))
    return sp.expand(body / 2)


def check_lk_closed_forms() -> tuple[bool, str]:
    d, lam = _d, _lam
    at_one = {
        1: (sp.Rational(1, 2), 0),
        2: ((3 * d**2 - 3 * d - 2) / sp.Integer(8), -1),
        3: ((27 * d**4 - 74 * d**3 - 3 * d**2 + 50 * d + 8) / sp.Integer(48), -2),
    }
    bad = []
    for k, (poly, s) in at_one.items():
        p, s_ours = load_or_build_lk(k).at_lambda_one()
        if s_ours != s or sp.expand(p.as_expr() - poly) != 0:
            bad.append(f"L_{k}(lambda=1)")
    sym = {
        1: sp.Rational(1, 2),
        2: ((2 * lam + lam**2) * d * (d - 1) - 2) / 8,
        3: (8 + 2 * (8 * lam - 2 * lam**2 + 4 * lam**3 + 11 * lam**4 + 4 * lam**5) * d
            + 3 * (-4 * lam + 12 * lam**2 + 4 * lam**3 - 9 * lam**4 - 4 * lam**5) * d**2
            + 2 * (-2 * lam - 22 * lam**2 - 16 * lam**3 + lam**4 + 2 * lam**5) * d**3
            + 3 * (4 * lam**2 + 4 * lam**3 + lam**4) * d**4) / 48,
    }
    for k, br in sym.items():
        if sp.expand(_bracket(k) - br) != 0:
            bad.append(f"L_{k} symbolic in lambda")
    return not bad, "all closed forms equal" if not bad else "mismatch: " + ", ".join(bad)


def check_series_coefficient() -> tuple[bool, str]:
    d = _d
    target = (243 * d**4 - 646 * d**3 - 33 * d**2 + 436 * d + 76) / sp.Integer(384)
    p2, _ = load_or_build_lk(2).at_lambda_one()
    p3, _ = load_or_build_lk(3).at_lambda_one()
    direct = sp.expand(p2.as_expr() ** 2 / 2 + p3.as_expr() - target)
    via_exp = sp.expand(series_coefficients(3)[2] - target)
    ok = direct == 0 and via_exp == 0
    return ok, "L_2^2/2 + L_3 matches exactly" if ok else f"residual {direct} / {via_exp}"


def check_ursell() -> tuple[bool, str]:
    expected = {
        "vertex": (U.complete_graph(1), Fraction(1)),
        "edge": (U.complete_graph(2), Fraction(-1, 2)),
        "triangle": (U.complete_graph(3), Fraction(1, 3)),
        "path-3": (U.path_graph(3), Fraction(1, 6)),
    }
    bad = [name for name, (H, v) in expected.items() if U.ursell_fast(H) != v or U.ursell_direct(H) != v]
    # every labelled graph on <= 6 vertices: fast on the graph, direct on its isomorphism class
    n_graphs = 0
    mismatches = 0
    for n in range(1, 7):
        pairs = list(combinations(range(n), 2))
        reps: dict[int, Fraction] = {}
        for m in range(1 << len(pairs)):
            adj = [0] * n
            for b, (i, j) in enumerate(pairs):
                if m >> b & 1:
                    adj[i] |= 1 << j
                    adj[j] |= 1 << i
            H = U.SmallGraph(n, tuple(adj))
            c = canonical_code(H.adj)
            if c not in reps:
                reps[c] = U.ursell_direct(H)
            n_graphs += 1
            if U.ursell_fast(H) != reps[c]:
                mismatches += 1
    if mismatches:
        bad.append(f"{mismatches} fast/direct mismatches")
    ok = not bad
    return ok, f"constants ok, fast == direct on {n_graphs} labelled graphs" if ok else "; ".join(bad)


def check_census() -> tuple[bool, str]:
    d = _d
    bad = []
    polymers = {  # (t, clique?) -> (count, |N| = t d - offset)
        1: [(2 ** (d - 1), 0)],
        2: [(2 ** (d - 3) * d * (d - 1), 2)],
        3: [(2 ** (d - 2) * d * (d - 1) * (d - 2) / 3, 5), (2 ** (d - 4) * d * (d - 1) * (d - 2) * (d - 3), 4)],
    }
    for t, want in polymers.items():
        got = []
        for T in enumerate_defect_types(t):
            alpha, beta = T.neighborhood_form
            if alpha != t:
                bad.append(f"polymer {T.id} |N| slope {alpha}")
            got.append((count_nT(T).symbolic(), -beta))
        for cnt, off in want:
            if not any(o == off and sp.simplify(c - cnt) == 0 for c, o in got):
                bad.append(f"size-{t} polymer count {cnt}")
        if len(got) != len(want):
            bad.append(f"{len(got)} polymer types of size {t}")
    clusters = {  # k -> list of (polymer sizes, phi, u-offset, count)
        1: [((1,), Fraction(1), 0, 2 ** (d - 1))],
        2: [((1, 1), Fraction(-1, 2), 0, 2 ** (d - 1) + 2 ** (d - 2) * d * (d - 1)),
            ((2,), Fraction(1), 2, 2 ** (d - 3) * d * (d - 1))],
        3: [((3,), Fraction(1), 5, 2 ** (d - 2) * d * (d - 1) * (d - 2) / 3),
            ((3,), Fraction(1), 4, 2 ** (d - 4) * d * (d - 1) * (d - 2) * (d - 3)),
            ((1, 1, 1), Fraction(1, 3), 0, 2 ** (d - 1) + 3 * 2 ** (d - 2) * d * (d - 1) + 2 ** (d - 1) * d * (d - 1) * (d - 2)),
            ((1, 1, 1), Fraction(1, 6), 0, 3 * 2 ** (d - 3) * d * (d - 1) * (d - 2) * (d - 3)),
            ((1, 2), Fraction(-1, 2), 2, 2 ** (d - 2) * d * (d - 1) * (d * (d - 1) - 2 * (d - 2)))],
    }
    for k, want in clusters.items():
        got = cluster_type_census(k)
        if len(got) != len(want):
            bad.append(f"{len(got)} cluster types of size {k}")
        for sizes, phi, off, cnt in want:
            hit = [c for c in got
                   if tuple(sorted(int(p[1:].split(".")[0]) for p in c.polymer_types)) == sizes
                   and c.phi == phi and c.offset == off and sp.simplify(c.symbolic() - cnt) == 0]
            if len(hit) != 1:
                bad.append(f"cluster {sizes} phi={phi}")
    ok = not bad
    return ok, "polymer and cluster counts match (sizes 1-3)" if ok else "; ".join(bad)


def check_oracle_chain(threads: int = 1) -> tuple[bool, str]:
    bad = []
    vals = []
    for d in range(1, 5):
        brute = sum(brute_force_polynomial(d))
        z = exact_Z(d, 1, threads=threads)
        vals.append(int(z))
        if z != brute:
            bad.append(f"d={d}: {z} != {brute}")
    if vals != [3, 7, 35, 743]:
        bad.append(f"values {vals}")
    for d, want in ((5, I_Q5), (6, I_Q6)):
        z = exact_Z(d, 1, threads=threads)
        if z != want or sum(transfer_polynomial(d)) != want:
            bad.append(f"d={d}: {z} vs regression {want}")
    ok = not bad
    return ok, f"i(Q_d) = {vals + [I_Q5, I_Q6]}" if ok else "; ".join(bad)


def truncation_residuals(d: int, lam, ks=(1, 2, 3), threads: int = 1) -> list[mpmath.mpf]:
    ex = exact_log_Z(d, lam, threads=threads)
    return [abs(approx_log_Z(ModelParams(d, lam), k).value - ex) for k in ks]


def check_truncation(threads: int = 1) -> tuple[bool, str]:
    parts = []
    ok = True
    for lam in (Fraction(1, 2), Fraction(1)):
        R = truncation_residuals(6, lam, threads=threads)
        dec = all(a > b for a, b in zip(R, R[1:]))
        ok &= dec
        parts.append(f"lambda={lam}: R=" + ",".join(mpmath.nstr(r, 4) for r in R) + ("" if dec else " NOT decreasing"))
    return ok, "; ".join(parts)


def check_concrete_lk(lams=(Fraction(1, 2), Fraction(2))) -> tuple[bool, str]:
    bad = []
    for d in range(4, 9):
        for lam in lams:
            for k in range(1, 5):
                if concrete_Lk(k, d, lam) != evaluate_Lk(load_or_build_lk(k), d, lam):
                    bad.append(f"(k={k}, d={d}, lambda={lam})")
    ok = not bad
    return ok, "symbolic == concrete for k<=4, d=4..8" if ok else "mismatch at " + ", ".join(bad)


def check_defect_predictions() -> tuple[bool, str]:
    bad = []
    [single] = defect_stats(1)
    for d in range(2, 41):
        if single.mT(d, 1) != Fraction(1, 2):
            bad.append(f"m_T(d={d})")
    worst = 0.0
    for i in range(100):
        s = -5 + 15 * i / 99
        want = math.exp(-s / 2) / 2
        worst = max(worst, abs(poisson_mean(1, s) - want) / want)
    if worst >= 1e-12:
        bad.append(f"poisson_mean rel err {worst:.2e}")
    for d in (2, 10, 100, 10**6):
        if threshold_lambda_t(d, 1, 0.0) != 1:
            bad.append(f"threshold at d={d}")
    ok = not bad
    return ok, f"m_T=1/2 for d=2..40, poisson rel err {worst:.1e}, threshold 1" if ok else "; ".join(bad)


def check_sampler(seeds=range(10), n: int = 100_000, glauber_snapshots: int = 20_000) -> tuple[bool, str]:
    dist = exact_defect_distribution(5, 1)
    passes = 0
    ps = []
    for seed in seeds:
        keys = sample_census_keys(exact_sample(5, 1, n, seed))
        p = goodness_of_fit(empirical(keys), dist).p_value
        ps.append(p)
        passes += p > 0.01
    need = len(list(seeds)) - 1
    g = glauber_census(5, 1, glauber_snapshots, seed=12345)
    emp = {k: c / len(g) for k, c in empirical(g).items()}
    tv_full = total_variation(emp, dist)
    tv_size1 = total_variation(marginal_size_count(emp, 1), marginal_size_count(dist, 1))
    ok = passes >= need and tv_full <= 0.02 and tv_size1 <= 0.02
    return ok, (f"exact sampler {passes}/{len(ps)} seeds p>0.01 (min p {min(ps):.3f}); "
                f"Glauber TV {tv_full:.4f} (census), {tv_size1:.4f} (size-1)")


def check_sandwich() -> tuple[bool, str]:
    bad = []
    lams = (Fraction(1, 2), Fraction(1), Fraction(2))
    for t in range(1, 5):
        for st in defect_stats(t):
            for d in range(6, 13):
                n = st.nT.at(d)
                lo, hi = Fraction(2 ** (d - 1), t), 2 ** (d - 1) * (math.e * d * d) ** (t - 1) / t
                if not lo <= n <= hi:
                    bad.append(f"n_T {st.T.id} d={d}")
                for lam in lams:
                    w = st.wT(d, lam)
                    u = 1 + lam
                    if not lam**t * u ** (-d * t) <= w <= lam**t * u ** (-d * t + 2 * t * t):
                        bad.append(f"w_T {st.T.id} d={d} lambda={lam}")
            if st.T.is_tree:
                lead = st.nT.poly_over_2d()
                if lead.degree() != 2 * t - 2 or lead.LC() != st.T.c_T:
                    bad.append(f"leading coefficient {st.T.id}")
    ok = not bad
    return ok, "bounds hold for t<=4, d=6..12; tree leading terms = 2^-t/|Aut|" if ok else "; ".join(bad[:5])


CHECKS: list[tuple[int, str, Callable[..., tuple[bool, str]]]] = [
    (1, "L_k closed forms", check_lk_closed_forms),
    (2, "exp-series coefficient", check_series_coefficient),
    (3, "Ursell values", check_ursell),
    (4, "polymer and cluster census", check_census),
    (5, "exact Z oracle chain", check_oracle_chain),
    (6, "truncation convergence at d=6", check_truncation),
    (7, "concrete vs symbolic L_k", check_concrete_lk),
    (8, "defect predictions", check_defect_predictions),
    (9, "sampler fidelity", check_sampler),
    (10, "sandwich bounds and tree leading terms", check_sandwich),
]


def run_check(number: int, **kw) -> CheckResult:
    for num, name, fn in CHECKS:
        if num == number:
            t0 = time.perf_counter()
            try:
                ok, detail = fn(**kw)
            except Exception as exc:  # a crash is a failure of that criterion only
                ok, detail = False, f"error: {exc!r}"
            return CheckResult(num, name, ok, detail, time.perf_counter() - t0)
    raise KeyError(number)


def run_all(threads: int = 1, only=None) -> list[CheckResult]:
    out = []
    for num, _name, _fn in CHECKS:
        if only and num not in only:
            continue
        kw = {"threads": threads} if num in (5, 6) else {}
        out.append(run_check(num, **kw))
    return out
