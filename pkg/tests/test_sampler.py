from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from hypercube_clusters.defects import classify_components
from hypercube_clusters.exact import CapabilityError, exact_Z
from hypercube_clusters.sampler import (InsufficientSamples, empirical, exact_defect_distribution, exact_sample,
                                        glauber_census, glauber_chain, goodness_of_fit, heat_bath_probs,
                                        make_rng, marginal_size_count, sample_census_keys, total_variation)


def all_independent_sets(d):
    n = 1 << d
    out = []
    for m in range(1 << n):
        if all(not (m >> v & 1 and m >> (v ^ (1 << i)) & 1) for v in range(n) for i in range(d)):
            out.append([v for v in range(n) if m >> v & 1])
    return out


@pytest.mark.parametrize("d,lam", [(2, Fraction(1)), (3, Fraction(1)), (3, Fraction(2, 3)), (4, Fraction(1))])
def test_distribution_matches_enumeration(d, lam):
    sets = all_independent_sets(d)
    weight = Counter()
    for I in sets:
        weight[classify_components(I, t_max=4).key()] += lam ** len(I)
    Z = sum(weight.values())
    assert Z == exact_Z(d, lam)
    dist = {k: p for k, p in exact_defect_distribution(d, lam).items() if p}
    assert dist == {k: w / Z for k, w in weight.items()}


def test_i_q3_is_35():
    assert len(all_independent_sets(3)) == 35


def test_distribution_normalised_and_contains_ground_states():
    for lam in (Fraction(1, 2), Fraction(1), Fraction(3)):
        dist = exact_defect_distribution(5, lam)
        assert sum(dist.values()) == 1
        empty = tuple() + (("oversize", 0),)
        u = 1 + lam
        one_side = (2 * u**16 - 1) / exact_Z(5, lam)
        assert dist[empty] >= one_side


def test_size_one_mean_moves_towards_half():
    means = []
    for d in (4, 5):
        m = marginal_size_count(exact_defect_distribution(d, 1), 1)
        means.append(sum(k * p for k, p in m.items()))
    assert abs(means[1] - Fraction(1, 2)) < abs(means[0] - Fraction(1, 2))


def test_capabilities():
    with pytest.raises(CapabilityError):
        exact_defect_distribution(6, 1)
    with pytest.raises(CapabilityError):
        exact_sample(6, 1, 10, 0)
    with pytest.raises(CapabilityError):
        next(glauber_chain(17, 1, 0, 1))


def test_samples_are_independent_sets_and_minority_consistent():
    s = exact_sample(5, Fraction(3, 2), 2000, 11)
    for I in s.independent_sets():
        assert all(v ^ (1 << i) not in I for v in I for i in range(5))
    a = np.bitwise_count(s.A)
    b = np.bitwise_count(s.B)
    # the census is always taken on the side with no more occupied vertices
    keys = sample_census_keys(s)
    mass = [sum(int(t[1:].split(".")[0]) * c for t, c in k if t != "oversize") for k in keys]
    assert all(m <= min(x, y) for m, x, y in zip(mass, a, b))


def test_tiny_lambda_gives_empty_sets():
    s = exact_sample(4, 1e-12, 1000, 3)
    assert not s.A.any() and not s.B.any()


def test_determinism():
    a = exact_sample(5, 1, 5000, 42)
    b = exact_sample(5, 1, 5000, 42)
    c = exact_sample(5, 1, 5000, 43)
    assert np.array_equal(a.A, b.A) and np.array_equal(a.B, b.B)
    assert not np.array_equal(a.A, c.A)


@pytest.mark.parametrize("d,n", [(3, 10**5), (2, 10**6), (3, 10**6)])
def test_uniform_at_lambda_one(d, n):
    masks = exact_sample(d, 1, n, 5).vertex_masks()
    counts = Counter(masks.tolist())
    total = len(all_independent_sets(d))
    assert len(counts) == total
    p = 1 / total
    sd = (n * p * (1 - p)) ** 0.5
    assert all(abs(c - n * p) < 4 * sd for c in counts.values())


def test_lambda_weights_at_d3():
    lam = Fraction(2)
    sets = all_independent_sets(3)
    Z = sum(lam ** len(I) for I in sets)
    n = 10**6
    counts = Counter(exact_sample(3, lam, n, 9).vertex_masks().tolist())
    for I in sets:
        p = float(lam ** len(I) / Z)
        m = sum(1 << v for v in I)
        assert abs(counts[m] - n * p) < 4 * (n * p * (1 - p)) ** 0.5


def test_heat_bath_ratio_is_lambda():
    for lam in (Fraction(1, 3), Fraction(1), Fraction(7, 2)):
        p_on, p_off = heat_bath_probs(lam)
        assert p_on / p_off == lam and p_on + p_off == 1


def test_glauber_stays_independent_and_is_seeded():
    a = [s.occ.copy() for s in glauber_chain(6, 1, 3, 20, burn_in=10, debug=True)]
    b = [s.occ.copy() for s in glauber_chain(6, 1, 3, 20, burn_in=10, init="empty", debug=True)]
    c = [s.occ.copy() for s in glauber_chain(6, 1, 3, 20, burn_in=10, debug=True)]
    assert all(np.array_equal(x, y) for x, y in zip(a, c))
    assert len(b) == 20
    with pytest.raises(ValueError):
        next(glauber_chain(4, 1, 0, 1, init="full"))


def test_glauber_d5_close_to_exact():
    dist = exact_defect_distribution(5, 1)
    g = glauber_census(5, 1, 20000, seed=99)
    emp = {k: c / len(g) for k, c in empirical(g).items()}
    assert total_variation(marginal_size_count(emp, 1), marginal_size_count(dist, 1)) <= 0.02


def test_glauber_d10_mean_near_half():
    keys = glauber_census(10, 1, 20000, seed=7)
    mean = sum(sum(c for t, c in k if t.startswith("T1.")) for k in keys) / len(keys)
    assert abs(mean - 0.5) < 0.05


def test_gof_needs_samples():
    with pytest.raises(InsufficientSamples):
        goodness_of_fit({0: 10}, ("poisson", 0.5))


def test_gof_null_calibration():
    rng = make_rng(2024)
    ps = [goodness_of_fit(dict(Counter(rng.poisson(0.5, 2000).tolist())), ("poisson", 0.5)).p_value
          for _ in range(100)]
    assert stats.kstest(ps, "uniform").pvalue > 0.01


def test_gof_power():
    rng = make_rng(77)
    rejections = sum(
        goodness_of_fit(dict(Counter(rng.poisson(0.5, 10**4).tolist())), ("poisson", 1.0)).p_value < 0.01
        for _ in range(100))
    assert rejections > 99 or rejections == 100


def test_gof_exact_model_and_stray_outcomes():
    model = {"a": 0.5, "b": 0.5}
    r = goodness_of_fit({"a": 500, "b": 480, "c": 20}, model)
    assert r.p_value < 1e-6
    r = goodness_of_fit({"a": 510, "b": 490}, model)
    assert r.p_value > 0.3


def test_spawned_streams_differ():
    ss = np.random.SeedSequence(5)
    g1, g2 = (np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(2))
    assert g1.random() != g2.random()
