from fractions import Fraction

import mpmath
import numpy as np
import pytest

from hypercube_clusters.exact import (CapabilityError, brute_force_polynomial, exact_log_Z, exact_Z,
                                      independence_polynomial, neighborhood_histogram, poly_eval,
                                      small_subset_histogram, transfer_polynomial, z_from_hist)

# frozen from the bipartite sum and confirmed by the transfer oracle
I_Q5 = 254475
I_Q6 = 19768832143

LAMS = [Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3)]


@pytest.mark.parametrize("d,value", [(1, 3), (2, 7), (3, 35), (4, 743)])
def test_small_values_by_brute_force(d, value):
    assert sum(brute_force_polynomial(d)) == value
    assert exact_Z(d, 1) == value


@pytest.mark.parametrize("d", [1, 2, 3, 4])
@pytest.mark.parametrize("lam", LAMS)
def test_bipartite_sum_equals_brute_force(d, lam):
    assert exact_Z(d, lam) == poly_eval(brute_force_polynomial(d), lam)


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
def test_side_swap_symmetry(d):
    h0 = neighborhood_histogram(d, side=0)
    h1 = neighborhood_histogram(d, side=1)
    assert np.array_equal(h0, h1)
    for lam in LAMS:
        assert z_from_hist(h0, lam) == z_from_hist(h1, lam)


@pytest.mark.parametrize("d", [4, 5, 6])
def test_transfer_oracle(d):
    assert transfer_polynomial(d) == independence_polynomial(neighborhood_histogram(d) if d < 6 else _hist6())


def _hist6():
    from hypercube_clusters.cache import load_or_build_histogram

    return load_or_build_histogram(6)


def test_regression_constants():
    assert exact_Z(5, 1) == I_Q5
    assert exact_Z(6, 1) == I_Q6


def test_histogram_mass():
    for d in range(1, 6):
        h = neighborhood_histogram(d)
        assert h.sum() == 2 ** (2 ** (d - 1))
        assert h[0, 0] == 1


def test_small_subset_histogram_agrees():
    full = neighborhood_histogram(4)
    part = small_subset_histogram(4, 4)
    for s in range(1, 5):
        assert {n: int(c) for n, c in part[s].items()} == {int(n): int(full[s, n]) for n in np.nonzero(full[s])[0]}


def test_float_lambda_uses_mpmath():
    z = exact_Z(4, 0.5)
    assert isinstance(z, mpmath.mpf)
    q = exact_Z(4, Fraction(1, 2))
    assert abs(z - mpmath.mpf(q.numerator) / q.denominator) < mpmath.mpf(10) ** -40 * z


def test_log_Z_precision():
    v = exact_log_Z(6, 1, dps=60)
    assert mpmath.almosteq(v, mpmath.log(I_Q6), 1e-55)


def test_capability_errors():
    with pytest.raises(CapabilityError):
        exact_Z(7, 1)
    with pytest.raises(CapabilityError):
        brute_force_polynomial(5)
    with pytest.raises(CapabilityError):
        transfer_polynomial(7)


def test_parallel_shards_match():
    assert np.array_equal(neighborhood_histogram(6, threads=2), _hist6())
