from fractions import Fraction
from itertools import combinations
from math import factorial

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from hypercube_clusters.ursell import (FAST_MAX_N, GraphTooLarge, SmallGraph, complete_graph, path_graph,
                                       star_graph, ursell, ursell_direct, ursell_fast)


@pytest.mark.parametrize("H,value", [
    (complete_graph(1), Fraction(1)),
    (complete_graph(2), Fraction(-1, 2)),
    (complete_graph(3), Fraction(1, 3)),
    (path_graph(3), Fraction(1, 6)),
])
def test_small_constants(H, value):
    assert ursell_direct(H) == value
    assert ursell_fast(H) == value


@pytest.mark.parametrize("n", range(1, 9))
def test_complete_graph_closed_form(n):
    assert ursell_fast(complete_graph(n)) == Fraction((-1) ** (n - 1), n)


@pytest.mark.parametrize("n", range(2, 10))
def test_trees_and_cycles(n):
    assert ursell_fast(path_graph(n)) == Fraction((-1) ** (n - 1), factorial(n))
    assert ursell_fast(star_graph(n)) == Fraction((-1) ** (n - 1), factorial(n))
    if n >= 3:
        cycle = SmallGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])
        assert ursell_fast(cycle) == Fraction((-1) ** (n - 1) * (n - 1), factorial(n))


def test_disconnected_is_zero():
    H = SmallGraph.from_edges(4, [(0, 1), (2, 3)])
    assert ursell_direct(H) == 0 and ursell_fast(H) == 0


def test_atlas_up_to_seven_vertices():
    # every isomorphism class with <= 7 vertices and <= 14 edges
    checked = 0
    for G in nx.graph_atlas_g()[1:]:
        if G.number_of_edges() > 14:
            continue
        H = SmallGraph.from_edges(G.number_of_nodes(), list(G.edges()))
        assert ursell_fast(H) == ursell_direct(H)
        checked += 1
    assert checked > 900


@st.composite
def graphs(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    pairs = list(combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return SmallGraph.from_edges(n, chosen)


@settings(max_examples=200, deadline=None)
@given(graphs())
def test_sign_pattern(H):
    v = ursell(H)
    if not H.is_connected():
        assert v == 0
    else:
        assert v != 0 and (v > 0) == (H.n % 2 == 1)


@settings(max_examples=100, deadline=None)
@given(graphs(max_n=6), st.permutations(range(6)))
def test_relabelling_invariance(H, perm):
    p = [x for x in perm if x < H.n]
    relabelled = SmallGraph.from_edges(H.n, [(p[i], p[j]) for i, j in H.edges()])
    assert ursell_fast(relabelled) == ursell_fast(H)


def test_graph_validation():
    with pytest.raises(ValueError):
        SmallGraph(2, (0b10, 0b00))  # asymmetric
    with pytest.raises(ValueError):
        SmallGraph(1, (0b1,))  # self-loop
    with pytest.raises(GraphTooLarge):
        ursell_fast(complete_graph(FAST_MAX_N + 1))
