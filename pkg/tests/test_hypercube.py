from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from hypercube_clusters.hypercube import (LinkedSet, ModelParams, ParityMismatch, Vertex, bipartite_closure,
                                          even_vertices, is_two_linked, neighborhood, neighborhood_size,
                                          neighborhood_size_embedded, parse_lambda, two_linked_components)


def test_vertex_neighbors_d3():
    v = Vertex(0b000, 3)
    assert {str(u) for u in v.neighbors()} == {"100", "010", "001"}
    assert Vertex(0b101, 3).parity == 0


def test_vertex_out_of_range():
    with pytest.raises(ValueError):
        Vertex(8, 3)


def test_linked_set_checks():
    S = LinkedSet.of([0, 0b11, 0b110])
    assert S.n_active == 3 and S.is_canonical()
    with pytest.raises(ParityMismatch):
        LinkedSet.of([0, 1])
    with pytest.raises(ValueError, match="2-linked"):
        LinkedSet.of([0, 0b1111])


def test_components_example():
    comps = two_linked_components([0, 0b11, 0b111100], 7)
    assert sorted(len(c) for c in comps) == [1, 2]
    # 0 is at distance 2 from both e1+e2 and e5+e6, so these form one path
    comps = two_linked_components([0, 0b11, 0b110000], 7)
    assert [len(c) for c in comps] == [3]
    with pytest.raises(ParityMismatch):
        two_linked_components([0, 1], 3)


def test_closure_single_vertex_is_itself():
    assert bipartite_closure([0], 5) == {0}


def test_closure_of_star_neighbourhood():
    # all even vertices at distance 2 from 0 in Q_3 cover N(0); their closure picks up 0
    pts = [v for v in even_vertices(3) if v.bit_count() == 2]
    assert 0 in bipartite_closure(pts, 3)


def test_embedded_neighbourhood_examples():
    assert neighborhood_size_embedded([0], 0) == (1, 0)
    assert neighborhood_size_embedded([0, 0b11], 2) == (2, -2)
    with pytest.raises(ValueError):
        neighborhood_size_embedded([0b11, 0b110], 3)


@st.composite
def canonical_sets(draw):
    a = draw(st.integers(2, 6))
    verts = [v for v in even_vertices(a) if v]
    extra = draw(st.lists(st.sampled_from(verts), min_size=1, max_size=5, unique=True))
    S = frozenset([0, *extra])
    act = 0
    for v in S:
        act |= v
    return S, act.bit_length(), act


@settings(max_examples=150, deadline=None)
@given(canonical_sets(), st.integers(0, 5))
def test_embedded_formula_matches_direct(data, extra_d):
    S, a, act = data
    if act != (1 << a) - 1:
        return
    alpha, beta = neighborhood_size_embedded(S, a)
    for d in range(a, a + extra_d + 1):
        assert neighborhood_size(S, d) == alpha * d + beta


@settings(max_examples=100, deadline=None)
@given(st.sets(st.sampled_from(even_vertices(5)), min_size=1, max_size=8))
def test_closure_contains_set_and_preserves_neighbourhood(A):
    cl = bipartite_closure(A, 5)
    assert set(A) <= cl
    assert neighborhood(cl, 5) == neighborhood(A, 5)
    assert bipartite_closure(cl, 5) == cl


@settings(max_examples=100, deadline=None)
@given(st.sets(st.sampled_from(even_vertices(5)), min_size=1, max_size=10))
def test_components_partition(A):
    comps = two_linked_components(A, 5)
    assert frozenset().union(*(c.members for c in comps)) == frozenset(A)
    assert all(is_two_linked(c.members) for c in comps)
    for c1, c2 in combinations(comps, 2):
        assert all((x ^ y).bit_count() >= 4 for x in c1.members for y in c2.members)


def test_parse_lambda():
    assert parse_lambda("3/2") == Fraction(3, 2)
    assert parse_lambda("2") == Fraction(2)
    with pytest.warns(UserWarning):
        assert parse_lambda("0.5") == 0.5


def test_model_params():
    assert ModelParams(6, Fraction(1)).valid
    assert not ModelParams(6, Fraction(1, 2)).valid
    assert ModelParams(None, Fraction(1)).valid is None
    with pytest.raises(ValueError):
        ModelParams(3, 0)
