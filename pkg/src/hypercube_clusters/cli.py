"""Command-line entry point.

Scalar results are printed as one JSON object per line; sample censuses go
to CSV.  Exit codes: 0 success, 2 usage or bounds, 3 capability (size too
large for an exact method), 4 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
import warnings
from fractions import Fraction

from . import __version__

EXIT_OK, EXIT_USAGE, EXIT_CAPABILITY, EXIT_VERIFY = 0, 2, 3, 4


class Emitter:
    def __init__(self, args, out_path):
        self.config = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in vars(args).items() if k != "func"}
        self.out = open(out_path, "a") if out_path else None

    def emit(self, record: dict, t0: float):
        from . import cache

        rec = {"version": __version__, "config": self.config, "cache": dict(sorted(cache.provenance.items())),
               **record, "elapsed_s": round(time.perf_counter() - t0, 3)}
        line = json.dumps(rec, default=str)
        print(line)
        if self.out:
            self.out.write(line + "\n")
            self.out.flush()


def _lam(text):
    from .hypercube import parse_lambda

    return parse_lambda(text)


def _pretty_at_one(k: int) -> str:
    """'(3d^2-3d-2)/8 * 2^-d' style rendering of L_k at lambda = 1."""
    import sympy as sp

    from .cache import load_or_build_lk

    poly, s = load_or_build_lk(k).at_lambda_one()
    den, prim = poly.clear_denoms()
    body = str(prim.as_expr()).replace("**", "^").replace("*", "").replace(" ", "")
    if prim.degree() <= 0:
        core = f"{sp.Rational(prim.as_expr(), den)}"
    else:
        core = f"({body})/{den}" if den != 1 else f"({body})"
    if s == 0:
        return core
    return f"{core} * 2^{'-' if s < 0 else ''}{'' if abs(s) == 1 else abs(s)}d"


def cmd_lk(args, em, t0):
    import sympy as sp

    from .cache import load_or_build_lk
    from .clusters import K_MAX, evaluate_Lk

    if not 1 <= args.k <= K_MAX:
        raise ValueError(f"k must be in 1..{K_MAX}")
    v = load_or_build_lk(args.k)
    rec = {"k": args.k, "L_symbolic": v.to_json()}
    lam = _lam(args.at_lambda) if args.at_lambda is not None else None
    if lam is not None and args.at_d is None:
        if lam == 1:
            rec["L_at_lambda_1"] = _pretty_at_one(args.k)
        else:
            expr = v.symbolic(sp.Symbol("d"), sp.Rational(lam.numerator, lam.denominator)
                              if isinstance(lam, Fraction) else sp.Float(lam))
            rec["L_at_lambda"] = str(expr)
    if args.at_d is not None and lam is None:
        rec["L_at_d"] = str(sp.simplify(v.symbolic(sp.Integer(args.at_d))))
    if args.at_d is not None and lam is not None:
        val = evaluate_Lk(v, args.at_d, lam)
        rec["value"] = str(val)
        rec["value_float"] = float(val)
    em.emit(rec, t0)


def cmd_approx_z(args, em, t0):
    from .expansion import approx_log_Z
    from .hypercube import ModelParams

    est = approx_log_Z(ModelParams(args.d, _lam(args.lam)), args.k)
    em.emit({"command": "approx-z", **est.to_json()}, t0)


def cmd_exact_z(args, em, t0):
    import mpmath

    from .exact import exact_log_Z, exact_Z

    lam = _lam(args.lam)
    z = exact_Z(args.d, lam, threads=args.threads)
    logz = exact_log_Z(args.d, lam, dps=args.precision, threads=args.threads)
    em.emit({"d": args.d, "lambda": str(lam), "Z": str(z) if isinstance(z, Fraction) else mpmath.nstr(z, args.precision),
             "logZ": mpmath.nstr(logz, args.precision)}, t0)


def cmd_ivalue(args, em, t0):
    from .exact import exact_Z

    em.emit({"d": args.d, "i_Qd": int(exact_Z(args.d, 1, threads=args.threads))}, t0)


def cmd_defects(args, em, t0):
    from .defects import count_nT, defect_stats, enumerate_defect_types, poisson_mean, threshold_lambda_t

    if args.poisson_mean is not None:
        t, s = args.poisson_mean
        em.emit({"poisson_mean": poisson_mean(int(t), float(s)), "t": int(t), "s": float(s)}, t0)
        return
    if args.threshold is not None:
        t, s, d = args.threshold
        em.emit({"threshold_lambda": threshold_lambda_t(int(d), int(t), float(s)), "t": int(t), "s": float(s),
                 "d": int(d)}, t0)
        return
    if args.stats is not None:
        d, lam = int(args.stats[0]), _lam(args.stats[1])
        sizes = [args.t] if args.t is not None else [1, 2, 3, 4]
        for t in sizes:
            for st in defect_stats(t):
                em.emit(st.to_json(d, lam), t0)
        return
    if args.t is None:
        raise ValueError("give a size t or one of --stats/--threshold/--poisson-mean")
    types = enumerate_defect_types(args.t)
    rows = []
    for T in types:
        row = {"type_id": T.id, "t": T.t, "edges": T.edges, "is_tree": T.is_tree, "aut": T.aut_count,
               "witness": sorted(T.witness), "neighborhood_form": list(T.neighborhood_form)}
        if T.t <= 5:
            row["nT"] = str(count_nT(T).symbolic())
        rows.append(row)
    em.emit({"t": args.t, "n_types": len(types), "types": rows}, t0)


def census_csv(keys) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sample", "type_id", "size", "count"])
    for i, key in enumerate(keys):
        for tid, c in key:
            if tid == "oversize":
                if c:
                    w.writerow([i, "oversize", "", c])
            else:
                w.writerow([i, tid, tid[1:].split(".")[0], c])
    return buf.getvalue()


def cmd_sample(args, em, t0):
    from collections import Counter

    from .defects import defect_stats
    from .sampler import (exact_defect_distribution, exact_sample, glauber_census, goodness_of_fit,
                          key_size_count, sample_census_keys, total_variation)

    lam = _lam(args.lam)
    if args.engine == "exact":
        keys = sample_census_keys(exact_sample(args.d, lam, args.n, args.seed), args.t_max)
    else:
        keys = glauber_census(args.d, lam, args.n, args.seed, t_max=args.t_max, interval=args.interval,
                              burn_in=args.burn_in)
    text = census_csv(keys)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    size1 = Counter(key_size_count(k, 1) for k in keys)
    [st1] = defect_stats(1)
    m1 = float(st1.mT(args.d, lam))
    rec = {"engine": args.engine, "d": args.d, "lambda": str(lam), "n": len(keys), "csv": args.out,
           "size1_mean": sum(k * c for k, c in size1.items()) / len(keys), "m_T_size1": m1,
           "minority_tie_rule": "|E cap I| = |O cap I| makes O the minority side"}
    if len(keys) >= 1000:
        rec["fit_poisson_size1"] = goodness_of_fit(dict(size1), ("poisson", m1)).to_json()
        if args.d <= 5:
            dist = exact_defect_distribution(args.d, lam, args.t_max)
            rec["fit_exact"] = goodness_of_fit(dict(Counter(keys)), dist).to_json()
            emp = {k: c / len(keys) for k, c in Counter(keys).items()}
            rec["tv_exact"] = total_variation(emp, dist)
    if not args.out:
        sys.stdout.write(text)
    em.emit(rec, t0)


def cmd_verify(args, em, t0):
    from .verify import run_all

    results = run_all(threads=args.threads, only=set(args.only) if args.only else None)
    for r in results:
        print(r.line(), flush=True)
    failed = [r.number for r in results if not r.passed]
    em.emit({"passed": [r.number for r in results if r.passed], "failed": failed}, t0)
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypercube-clusters", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--threads", type=int, default=1, help="worker processes for exact enumeration")
    p.add_argument("--cache-dir", help="cache root (overrides $HYPERCUBE_CLUSTERS_CACHE; empty disables)")
    p.add_argument("--precision", type=int, default=50, help="significant digits for high-precision output")
    p.add_argument("--output", help="also append JSON records to this file")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("lk", help="cluster sum L_k")
    s.add_argument("k", type=int)
    s.add_argument("--at-lambda")
    s.add_argument("--at-d", type=int)
    s.set_defaults(func=cmd_lk)

    s = sub.add_parser("approx-z", help="truncated expansion of log Z")
    s.add_argument("d", type=int)
    s.add_argument("lam")
    s.add_argument("k", type=int)
    s.set_defaults(func=cmd_approx_z)

    s = sub.add_parser("exact-z", help="exact Z(lambda), d <= 6")
    s.add_argument("d", type=int)
    s.add_argument("lam")
    s.set_defaults(func=cmd_exact_z)

    s = sub.add_parser("ivalue", help="number of independent sets of Q_d, d <= 6")
    s.add_argument("d", type=int)
    s.set_defaults(func=cmd_ivalue)

    s = sub.add_parser("defects", help="defect types and statistics")
    s.add_argument("t", type=int, nargs="?")
    s.add_argument("--stats", nargs=2, metavar=("D", "LAMBDA"))
    s.add_argument("--threshold", nargs=3, metavar=("T", "S", "D"))
    s.add_argument("--poisson-mean", nargs=2, metavar=("T", "S"))
    s.set_defaults(func=cmd_defects)

    s = sub.add_parser("sample", help="sample minority-side censuses")
    s.add_argument("d", type=int)
    s.add_argument("lam")
    s.add_argument("n", type=int)
    s.add_argument("seed", type=int)
    s.add_argument("--engine", choices=["exact", "glauber"], default="exact")
    s.add_argument("--t-max", type=int, default=4)
    s.add_argument("--interval", type=int, default=1, help="sweeps between Glauber snapshots")
    s.add_argument("--burn-in", type=int, help="Glauber burn-in sweeps (default 50 * 2^d)")
    s.add_argument("--out", help="census CSV path (default: stdout)")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("verify", help="run the acceptance checks")
    s.add_argument("--only", type=int, nargs="*")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    from . import cache
    from .exact import CapabilityError

    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.cache_dir is not None:
        os.environ["HYPERCUBE_CLUSTERS_CACHE"] = args.cache_dir
    cache.provenance.clear()
    em = Emitter(args, args.output)
    t0 = time.perf_counter()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            code = args.func(args, em, t0)
    except CapabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
