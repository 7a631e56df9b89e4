"""Bit-level geometry of the hypercube Q_d.

Vertices are plain ints (bit i set <=> coordinate i equals 1).  The
:class:`Vertex` wrapper carries the dimension for public-facing calls; the
hot paths below work on raw ints and take ``d`` explicitly.
"""
from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

# Placeholder for the unspecified constant in the lambda lower bound.
C0_PLACEHOLDER = 1.0


class ParityMismatch(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Vertex:
    bits: int
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.bits < 0 or self.bits >> self.dim:
            raise ValueError(f"bits {self.bits:#x} out of range for d={self.dim}")

    @property
    def parity(self) -> int:
        return self.bits.bit_count() & 1

    def neighbors(self) -> set["Vertex"]:
        return {Vertex(u, self.dim) for u in neighbor_bits(self.bits, self.dim)}

    def __str__(self):
        # coordinate 1 printed first
        return "".join("1" if self.bits >> i & 1 else "0" for i in range(self.dim))


def neighbors(v: Vertex) -> set[Vertex]:
    return v.neighbors()


def neighbor_bits(v: int, d: int) -> list[int]:
    return [v ^ (1 << i) for i in range(d)]


def parity(v: int) -> int:
    return v.bit_count() & 1


def even_vertices(d: int) -> list[int]:
    return [v for v in range(1 << d) if not v.bit_count() & 1]


def odd_vertices(d: int) -> list[int]:
    return [v for v in range(1 << d) if v.bit_count() & 1]


def neighborhood(members: Iterable[int], d: int) -> set[int]:
    out: set[int] = set()
    for v in members:
        for i in range(d):
            out.add(v ^ (1 << i))
    return out


def square_adjacent(u: int, v: int) -> bool:
    """Distance exactly 2 in Q_d (same-parity vertices at Hamming distance 2)."""
    return (u ^ v).bit_count() == 2


def active_mask(members: Iterable[int]) -> int:
    m = 0
    for v in members:
        m |= v
    return m


def is_two_linked(members: Iterable[int]) -> bool:
    """Connectivity in the square graph, by BFS over distance-2 pairs."""
    pts = list(members)
    if not pts:
        return False
    seen = {pts[0]}
    todo = [pts[0]]
    rest = set(pts[1:])
    while todo and rest:
        v = todo.pop()
        hit = [u for u in rest if (u ^ v).bit_count() == 2]
        for u in hit:
            rest.discard(u)
            seen.add(u)
            todo.append(u)
    return not rest


@dataclass(frozen=True)
class LinkedSet:
    """A 2-linked set of same-parity vertices.

    ``members`` is a frozenset of int bitmasks; ``active`` is the OR of all
    members, i.e. the set of active coordinates as a bitmask.
    """

    members: frozenset[int]
    dim: int | None = None
    active: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "active", active_mask(self.members))

    @classmethod
    def of(cls, members: Iterable[int], dim: int | None = None, check: bool = True) -> "LinkedSet":
        ms = frozenset(members)
        if check:
            if len({parity(v) for v in ms}) > 1:
                raise ParityMismatch("parity mismatch")
            if not is_two_linked(ms):
                raise ValueError("set is not 2-linked")
        return cls(ms, dim)

    def __len__(self):
        return len(self.members)

    @property
    def n_active(self) -> int:
        return self.active.bit_count()

    def is_canonical(self) -> bool:
        """Contains the zero vertex and its active coordinates form an initial segment."""
        return 0 in self.members and self.active == (1 << self.n_active) - 1

    def sorted(self) -> tuple[int, ...]:
        return tuple(sorted(self.members))


@dataclass(frozen=True)
class ModelParams:
    """Dimension and fugacity.  ``d`` may be ``None`` for symbolic work."""

    d: int | None
    lam: Fraction | float
    c0: float = C0_PLACEHOLDER

    def __post_init__(self):
        if self.d is not None and self.d < 1:
            raise ValueError("d must be >= 1")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")

    @property
    def exact(self) -> bool:
        return isinstance(self.lam, (int, Fraction))

    @property
    def valid(self) -> bool | None:
        """Whether lambda clears the C0 log d / d^(1/3) heuristic (C0 is a placeholder)."""
        if self.d is None:
            return None
        if self.d < 2:
            return False
        return float(self.lam) >= self.c0 * math.log(self.d) / self.d ** (1 / 3)

    @property
    def validity_note(self) -> str:
        return f"heuristic lambda >= C0 log d / d^(1/3) with placeholder C0={self.c0}"


def parse_lambda(text: str | float | int | Fraction) -> Fraction | float:
    """Rational strings ("p/q", integers) stay exact; decimals become floats with a warning."""
    if isinstance(text, (Fraction, int)):
        return Fraction(text)
    if isinstance(text, float):
        return text
    s = text.strip()
    if "/" in s or s.lstrip("+-").isdigit():
        return Fraction(s)
    warnings.warn(f"decimal lambda {s!r} routed to the float pipeline", stacklevel=2)
    return float(s)


# --- components and closure ------------------------------------------------


def two_linked_components(A: Iterable[int | Vertex], d: int | None = None) -> list[LinkedSet]:
    """Split a same-parity vertex set into maximal 2-linked components."""
    items = list(A)
    pts = [v.bits if isinstance(v, Vertex) else v for v in items]
    if d is None:
        dims = {v.dim for v in items if isinstance(v, Vertex)}
        d = dims.pop() if dims else None
    if len({parity(v) for v in pts}) > 1:
        raise ParityMismatch("parity mismatch")
    return [LinkedSet(frozenset(c), d) for c in components_bits(pts)]


def components_bits(pts: Iterable[int]) -> list[list[int]]:
    rest = set(pts)
    out = []
    while rest:
        s = rest.pop()
        comp = [s]
        q = deque([s])
        while q:
            v = q.popleft()
            hit = [u for u in rest if (u ^ v).bit_count() == 2]
            for u in hit:
                rest.discard(u)
                comp.append(u)
                q.append(u)
        out.append(comp)
    return out


def bipartite_closure(S: LinkedSet | Iterable[int], d: int) -> set[int]:
    """[S] = {v on S's side : N(v) subset of N(S)}."""
    members = S.members if isinstance(S, LinkedSet) else set(S)
    if not members:
        return set()
    side = parity(next(iter(members)))
    nb = neighborhood(members, d)
    # candidates must lie at distance <= 2 from S, since N(v) meets N(S)
    cand = set()
    for u in nb:
        for i in range(d):
            cand.add(u ^ (1 << i))
    return {v for v in cand if parity(v) == side and all(v ^ (1 << i) in nb for i in range(d))}


# --- neighbourhood sizes ---------------------------------------------------


def local_neighborhood_size(members: Iterable[int], a: int) -> int:
    """|N(S)| inside the a-dimensional subcube spanned by the first a coordinates."""
    return len(neighborhood(members, a))


def neighborhood_size_embedded(S: LinkedSet | Iterable[int], a: int | None = None) -> tuple[int, int]:
    """Return (alpha, beta) with |N(S)| = alpha*d + beta in every Q_d with d >= a.

    S must contain the zero vertex and use exactly the first ``a`` coordinates.
    """
    ls = S if isinstance(S, LinkedSet) else LinkedSet.of(S, check=False)
    if a is None:
        a = ls.n_active
    if 0 not in ls.members or ls.active != (1 << a) - 1:
        raise ValueError("set is not canonically embedded (needs 0 and active coordinates [a])")
    return affine_neighborhood(ls.members, a)


def affine_neighborhood(members: Iterable[int], a: int) -> tuple[int, int]:
    """Like :func:`neighborhood_size_embedded` but for any set supported on [a].

    Each vertex has d - a neighbours outside the subcube, all distinct.
    """
    ms = list(members)
    n_local = local_neighborhood_size(ms, a)
    return len(ms), n_local - a * len(ms)


def neighborhood_size(members: Iterable[int], d: int) -> int:
    return len(neighborhood(members, d))
