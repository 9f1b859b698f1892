import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from besselfpt.boundary import PolynomialBoundary
from besselfpt.errors import ArgumentError, DomainError
from besselfpt.oracle import EmpiricalDistribution, compare, linear_cdf, linear_density, simulate_fpt


@pytest.mark.parametrize("a,slope,t", [(1.0, 0.5, 1.0), (0.5, 0.0, 2.0), (2.0, 1.5, 0.7), (1.0, -0.3, 3.0)])
def test_linear_cdf_is_integral_of_density(a, slope, t):
    ref = quad(lambda s: linear_density(a, slope, s), 0, t, epsabs=1e-14)[0]
    assert linear_cdf(a, slope, t) == pytest.approx(ref, abs=1e-11)


def test_linear_closed_form_values():
    assert linear_density(1.0, 0.5, 1.0) == pytest.approx(0.12951759566589174, rel=1e-14)
    # reflection principle for a flat level
    assert linear_cdf(1.0, 0.0, 2.0) == pytest.approx(2 * norm.cdf(-1 / math.sqrt(2)), rel=1e-14)
    # positive drift boundary is never hit with probability 1 - exp(-2 a b)
    assert linear_cdf(1.0, 0.5, 1e9) == pytest.approx(math.exp(-1.0), rel=1e-6)
    assert linear_cdf(1.0, 0.5, 0.0) == 0.0
    with pytest.raises(DomainError):
        linear_density(1.0, 0.5, 0.0)
    with pytest.raises(ArgumentError):
        linear_density(0.0, 0.5, 1.0)


def test_empirical_distribution_validation():
    e = EmpiricalDistribution(np.array([0.0, 1.0, 2.0]), np.array([3, 1]), 10, 6)
    np.testing.assert_allclose(e.cdf_at_edges(), [0.0, 0.3, 0.4])
    np.testing.assert_allclose(e.cdf([0.5, 1.0, 5.0]), [0.0, 0.3, 0.4])
    assert e.horizon == 2.0
    with pytest.raises(ArgumentError):
        EmpiricalDistribution(np.array([0.0, 1.0]), np.array([3, 1]), 10, 6)
    with pytest.raises(ArgumentError):
        EmpiricalDistribution(np.array([0.0, 1.0, 2.0]), np.array([3, 1]), 10, 5)
    with pytest.raises(ArgumentError):
        EmpiricalDistribution(np.array([0.0, 2.0, 1.0]), np.array([3, 1]), 10, 6)


def test_compare():
    e = EmpiricalDistribution(np.array([0.0, 1.0, 2.0]), np.array([3, 1]), 10, 6)
    assert compare(e, lambda t: np.array([0.0, 0.3, 0.4])) == 0.0
    assert compare(e, lambda t: np.array([0.0, 0.25, 0.5])) == pytest.approx(0.1)


def test_linear_simulation_matches_closed_form(linear):
    e = simulate_fpt(linear, 2.0, 40_000, 1000, seed=1)
    assert compare(e, lambda t: linear_cdf(1.0, 0.5, t)) < 0.012


def test_correction_only_adds_hits(quadratic):
    with_c = simulate_fpt(quadratic, 2.0, 5000, 200, seed=3, correction=True)
    without = simulate_fpt(quadratic, 2.0, 5000, 200, seed=3, correction=False)
    assert np.all(with_c.cdf_at_edges() >= without.cdf_at_edges())
    assert with_c.n_not_hit < without.n_not_hit


def test_higher_boundary_is_hit_less():
    n_not_hit = [
        simulate_fpt(PolynomialBoundary((1.0, 0.0, c)), 2.0, 5000, 200, seed=4).n_not_hit for c in (0.05, 0.1, 0.3)
    ]
    assert n_not_hit[0] <= n_not_hit[1] <= n_not_hit[2]


def test_simulation_is_deterministic_across_workers(quadratic):
    a = simulate_fpt(quadratic, 1.0, 3000, 100, seed=5)
    b = simulate_fpt(quadratic, 1.0, 3000, 100, seed=5, workers=2)
    np.testing.assert_array_equal(a.counts, b.counts)
    assert a.n_not_hit == b.n_not_hit
    c = simulate_fpt(quadratic, 1.0, 3000, 100, seed=6)
    assert not np.array_equal(a.counts, c.counts)


def test_simulation_argument_checks(quadratic):
    with pytest.raises(ArgumentError):
        simulate_fpt(quadratic, 0.0, 10, 10, seed=0)
    with pytest.raises(ArgumentError):
        simulate_fpt(quadratic, 1.0, 0, 10, seed=0)


def test_longer_horizon_leaves_fewer_paths_unhit(quadratic):
    short = simulate_fpt(quadratic, 1.0, 5000, 100, seed=8)
    long = simulate_fpt(quadratic, 3.0, 5000, 300, seed=8)
    assert long.n_not_hit < short.n_not_hit
