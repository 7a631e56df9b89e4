"""Truncated cluster-expansion estimates of log Z and their error bookkeeping.

log Z(lambda) = log 2 + 2^(d-1) log(1+lambda) + sum_{j<=k} L_j + eps_k.

The big-O constant in eps_k is unknown, so every bound below is reported as
its functional form with constant 1 and is meant only for ordering and
monotonicity checks.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import sympy as sp

from .cache import load_or_build_lk
from .clusters import K_MAX, evaluate_Lk
from .hypercube import ModelParams

log = logging.getLogger(__name__)

DPS = 60
LARGE_LAMBDA = 2
BOUND_NOTE = "up to unspecified constant"


def gamma(d: int, k: int, lam) -> float:
    """Piecewise decay rate used in the convergence criterion."""
    if d < 2 or k < 1:
        raise ValueError("need d >= 2 and k >= 1")
    lu = math.log1p(float(lam))
    if k <= d / 10:
        return lu * (d * k - 3 * k * k) - 7 * k * math.log(d)
    if k <= d**4:
        return d * lu * k / 20
    return k / d**1.5


def truncation_bound(d: int, k: int, lam) -> mpmath.mpf:
    """d^(7k-3/2) 2^d (1+lambda)^(-dk+3k^2): tail of clusters of size >= k (large d)."""
    mpmath.mp.dps = DPS
    lam = _mp(lam)
    return mpmath.mpf(d) ** (7 * k - mpmath.mpf(3) / 2) * mpmath.mpf(2) ** d * (1 + lam) ** (-d * k + 3 * k * k)


def eps_bound(d: int, k: int, lam) -> mpmath.mpf:
    """2^d lambda^(k+1) d^(2k) / (1+lambda)^(d(k+1)), the order of the error after L_1..L_k."""
    mpmath.mp.dps = DPS
    lam = _mp(lam)
    return mpmath.mpf(2) ** d * lam ** (k + 1) * mpmath.mpf(d) ** (2 * k) / (1 + lam) ** (d * (k + 1))


def _mp(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


@dataclass
class TruncatedEstimate:
    d: int
    lam: Fraction | float
    k: int
    value: mpmath.mpf  # log Z estimate
    L_values: list = field(default_factory=list)
    error_bound: mpmath.mpf | None = None
    truncation: mpmath.mpf | None = None
    valid: bool | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def Z(self) -> mpmath.mpf:
        return mpmath.exp(self.value)

    def to_json(self) -> dict:
        def num(x):
            return None if x is None else mpmath.nstr(x, 30)

        return {
            "d": self.d,
            "lambda": str(self.lam),
            "k": self.k,
            "logZ_estimate": num(self.value),
            "error_bound_form": {
                "eps_k": num(self.error_bound),
                "formula": "2^d lambda^(k+1) d^(2k) / (1+lambda)^(d(k+1))",
                "truncation_tail": num(self.truncation),
                "note": BOUND_NOTE,
            },
            "L_values": [str(v) if isinstance(v, Fraction) else num(v) for v in self.L_values],
            "validity_flag": self.valid,
            "flags": self.flags,
        }


def ground_log(d: int, lam) -> mpmath.mpf:
    """log(2 (1+lambda)^(2^(d-1))), the two ground states with their fluctuations."""
    mpmath.mp.dps = DPS
    return mpmath.log(2) + 2 ** (d - 1) * mpmath.log1p(_mp(lam))


def _flags(params: ModelParams) -> list[str]:
    out = []
    if float(params.lam) > LARGE_LAMBDA:
        out.append("lambda > 2: bounded-lambda formula kept; the exp(-2^d/d^4) correction is not included")
    if params.valid is False:
        out.append("below the heuristic validity range: " + params.validity_note)
    return out


def approx_log_Z(params: ModelParams, k: int) -> TruncatedEstimate:
    """Ground-state term plus L_1..L_k.  k = 0 gives the ground-state term alone."""
    if params.d is None:
        raise ValueError("approx_log_Z needs a concrete d")
    if not 0 <= k <= K_MAX:
        raise ValueError(f"k must be in 0..{K_MAX}")
    d, lam = params.d, params.lam
    Ls = [evaluate_Lk(load_or_build_lk(j), d, lam) for j in range(1, k + 1)]
    mpmath.mp.dps = DPS
    value = ground_log(d, lam) + mpmath.fsum(_mp(v) for v in Ls)
    return TruncatedEstimate(
        d, lam, k, value, Ls,
        error_bound=eps_bound(d, k, lam) if k >= 1 else None,
        truncation=truncation_bound(d, k + 1, lam),
        valid=params.valid,
        flags=_flags(params),
    )


def ivalue_estimate(d: int, k: int) -> TruncatedEstimate:
    """Estimate of log i(Q_d), the lambda = 1 case."""
    return approx_log_Z(ModelParams(d, Fraction(1)), k)


# --- symbolic series at lambda = 1 --------------------------------------------

_d = sp.Symbol("d")


def lk_at_one(k: int, d: sp.Symbol = _d) -> sp.Expr:
    poly, s = load_or_build_lk(k).at_lambda_one()
    return poly.as_expr().subs(sp.Symbol("d"), d) * sp.Integer(2) ** (s * d)


def series_coefficients(order: int, d: sp.Symbol = _d) -> list[sp.Expr]:
    """Coefficients of 2^(-jd), j < order, in exp(L_2 + L_3 + ...) at lambda = 1.

    Rederived from the cluster sums: L_{j+1} carries 2^(-jd), so the j-th
    coefficient collects every product of L's whose indices minus one sum to j.
    """
    if not 1 <= order <= 3:
        raise ValueError("order must be 1, 2 or 3")
    x = sp.Symbol("x")  # stands for 2^(-d)
    parts = []
    for j in range(2, order + 1):
        poly, _ = load_or_build_lk(j).at_lambda_one()
        parts.append(poly.as_expr().subs(sp.Symbol("d"), d) * x ** (j - 1))
    expo = sp.series(sp.exp(sum(parts, sp.Integer(0))), x, 0, order).removeO()
    expo = sp.expand(expo)
    return [sp.factor(expo.coeff(x, j)) if j else sp.Integer(1) for j in range(order)]


def iQd_series(order: int, d: sp.Symbol = _d) -> sp.Expr:
    """Partial asymptotic series for i(Q_d): 2 sqrt(e) 2^(2^(d-1)) (1 + c_1 2^-d + c_2 2^-2d)."""
    coeffs = series_coefficients(order, d)
    body = sum((c * sp.Integer(2) ** (-j * d) for j, c in enumerate(coeffs)), sp.Integer(0))
    return 2 * sp.sqrt(sp.E) * sp.Integer(2) ** (sp.Integer(2) ** (d - 1)) * body


# --- closed forms at a given threshold ---------------------------------------


def closed_form_L12(d: int, lam, printed: bool = False) -> mpmath.mpf:
    """L_1 + L_2 in closed form, (lam/2)(2/u)^d (1 + ((2lam^2+lam^3) d(d-1) - c) / (4u^d)).

    c = 2*lam reproduces L_1 + L_2 exactly.  The displayed threshold form has
    c = 2; ``printed=True`` gives that variant, which agrees at lambda = 1 and
    differs by O(2^d / u^(2d)) otherwise.
    """
    mpmath.mp.dps = DPS
    lam = _mp(lam)
    u = 1 + lam
    c = 2 if printed else 2 * lam
    return lam / 2 * (2 / u) ** d * (1 + ((2 * lam**2 + lam**3) * d * (d - 1) - c) / (4 * u**d))


def corollary16_Z(params: ModelParams, t: int) -> TruncatedEstimate:
    """log of 2 (1+lambda)^(2^(d-1)) exp(L_1 + ... + L_(t-1)), up to the o(1) in the 2.

    The prefactor is (1+lambda)^(2^(d-1)); t = 3 uses the printed closed form
    for L_1 + L_2.  Below the threshold lambda_t(d) a warning is issued.
    """
    from .defects import threshold_lambda_t

    if params.d is None:
        raise ValueError("corollary16_Z needs a concrete d")
    if t < 1:
        raise ValueError("t must be >= 1")
    d, lam = params.d, params.lam
    flags = _flags(params)
    if d >= 2 and float(lam) < threshold_lambda_t(d, t, 0.0):
        msg = f"lambda={lam} is below the t={t} threshold at d={d}"
        warnings.warn(msg, stacklevel=2)
        flags.append(msg)
    if t == 3:
        extra = closed_form_L12(d, lam, printed=True)
        Ls = [extra]
        if lam != 1:
            flags.append("t=3 uses the printed closed form (constant 2, not 2*lambda); "
                         "it differs from L_1 + L_2 by O(2^d/(1+lambda)^(2d))")
    else:
        Ls = [evaluate_Lk(load_or_build_lk(j), d, lam) for j in range(1, t)]
        extra = mpmath.fsum(_mp(v) for v in Ls)
    value = ground_log(d, lam) + extra
    return TruncatedEstimate(
        d, lam, t - 1, value, Ls,
        error_bound=eps_bound(d, t - 1, lam) if t > 1 else None,
        truncation=truncation_bound(d, t, lam),
        valid=params.valid,
        flags=flags,
    )
