import math

import numpy as np
import pytest
from scipy.integrate import quad

from besselfpt.boundary import PolynomialBoundary, level_density
from besselfpt.errors import ArgumentError, ValidationError
from besselfpt.fpt import (
    bounds_at,
    cdf,
    cdf_curve,
    density_at,
    density_curve,
    drift_factor,
    expectation_term,
)
from besselfpt.montecarlo import McConfig
from besselfpt.oracle import compare, linear_cdf, linear_density, simulate_fpt

# Frozen output of tests/oracles/brute_force_expectation.py (f = 1 + 0.1 t^2, s = 1,
# 10^7 paths, 1024 steps, independent generator and bridge construction).
BRUTE_FORCE_VALUE = 0.8480778026146815
BRUTE_FORCE_STDERR = 1.0449124897063669e-05


@pytest.mark.parametrize("s", [0.1, 0.5, 1.0, 2.0, 5.0])
def test_linear_boundary_is_exact(linear, s):
    est = density_at(linear, s, McConfig(n_paths=10, seed=0))
    assert est.stderr == 0.0
    assert est.value == pytest.approx(linear_density(1.0, 0.5, s), rel=1e-12)
    assert est.value == pytest.approx(level_density(s, 1.0) * math.exp(-0.5 - s / 8), rel=1e-12)


def test_expectation_term_short_horizon(quadratic):
    # for s -> 0 the bridge barely moves: E ~ exp(-f'' a s / 2)
    est = expectation_term(quadratic, 1e-4, McConfig(n_paths=4096, n_steps=16, seed=1))
    assert est.value == pytest.approx(math.exp(-0.2 * 1e-4 / 2), abs=1e-7)


def test_expectation_term_in_unit_interval(quadratic, small_mc):
    for s in (0.2, 1.0, 3.0):
        est = expectation_term(quadratic, s, small_mc)
        assert 0.0 < est.value < 1.0


def test_expectation_term_against_brute_force(quadratic):
    est = expectation_term(quadratic, 1.0, McConfig(n_paths=200_000, n_steps=256, seed=2024))
    tol = 3.0 * math.hypot(est.stderr, BRUTE_FORCE_STDERR)
    assert abs(est.value - BRUTE_FORCE_VALUE) < tol


def test_density_is_deterministic(quadratic, small_mc):
    a = density_at(quadratic, 1.0, small_mc)
    b = density_at(quadratic, 1.0, small_mc)
    assert a == b
    assert density_at(quadratic, 1.0, McConfig(20_000, 128, seed=12)) != a


def test_density_rejects_invalid(small_mc):
    with pytest.raises(ValidationError):
        density_at(PolynomialBoundary((1, 0, -0.1)), 1.0, small_mc)
    with pytest.raises(ArgumentError):
        density_at(PolynomialBoundary((1, 0, 0.1)), 0.0, small_mc)


@pytest.mark.parametrize("t", [0.05, 0.3, 1.0, 2.5, 10.0])
def test_cdf_linear_matches_closed_form(linear, t):
    est = cdf(linear, t, McConfig(n_paths=10, seed=0))
    assert est.value == pytest.approx(linear_cdf(1.0, 0.5, t), abs=1e-10)


def test_cdf_linear_matches_adaptive_quadrature(linear):
    ref = quad(lambda s: linear_density(1.0, 0.5, s), 0, 1.7, epsabs=1e-13)[0]
    assert cdf(linear, 1.7, McConfig(n_paths=10, seed=0)).value == pytest.approx(ref, abs=1e-10)


def test_cdf_curve_linear_all_times(linear):
    times = np.linspace(0.0, 3.0, 41)
    ests = cdf_curve(linear, times, McConfig(n_paths=10, seed=0))
    np.testing.assert_allclose([e.value for e in ests], linear_cdf(1.0, 0.5, times), atol=1e-8)


def test_cdf_curve_monotone_and_bounded(quadratic, small_mc):
    times = np.linspace(0.0, 4.0, 33)
    vals = np.array([e.value for e in cdf_curve(quadratic, times, small_mc)])
    assert vals[0] == 0.0
    assert np.all(np.diff(vals) >= 0.0)
    assert np.all((vals >= 0.0) & (vals <= 1.0))


def test_cdf_decreases_with_curvature(small_mc):
    vals = [cdf(PolynomialBoundary((1.0, 0.0, c)), 2.0, small_mc).value for c in (0.02, 0.1, 0.4)]
    assert vals[0] > vals[1] > vals[2]


def test_cdf_argument_checks(quadratic, small_mc):
    with pytest.raises(ArgumentError):
        cdf(quadratic, 0.0, small_mc)
    with pytest.raises(ArgumentError):
        cdf_curve(quadratic, [1.0], small_mc, n_quad=8)
    with pytest.raises(ArgumentError):
        cdf_curve(quadratic, [-1.0], small_mc)


def test_density_curve_integrates_to_cdf(quadratic):
    cfg = McConfig(n_paths=20_000, n_steps=128, seed=3)
    curve = density_curve(quadratic, 3.0, 300, cfg)
    t = np.concatenate([[0.0], curve.times])
    p = np.concatenate([[0.0], curve.density])
    total = np.trapezoid(p, t) if hasattr(np, "trapezoid") else np.trapz(p, t)
    assert total == pytest.approx(cdf(quadratic, 3.0, cfg).value, abs=1e-3)


def test_density_curve_shapes_and_bounds(quadratic, small_mc):
    curve = density_curve(quadratic, 3.0, 20, small_mc)
    assert curve.times.shape == curve.density.shape == curve.lower.shape == (20,)
    assert curve.times[0] == pytest.approx(0.15) and curve.times[-1] == 3.0
    assert np.all(curve.lower <= curve.density + 3 * np.hypot(curve.stderr, curve.lower_stderr))
    assert np.all(curve.density <= curve.upper)
    np.testing.assert_allclose(curve.upper, drift_factor(quadratic, curve.times), rtol=1e-14)
    assert len(curve.estimates) == 20


def test_bounds_linear_collapse(linear, small_mc):
    bd = bounds_at(linear, 1.0, small_mc)
    assert bd.lower == bd.upper == pytest.approx(linear_density(1.0, 0.5, 1.0), rel=1e-12)
    assert bd.lower_stderr == 0.0


def test_bounds_upper_is_drift_factor(quadratic, small_mc):
    bd = bounds_at(quadratic, 1.5, small_mc)
    h = level_density(1.5, 1.0)
    assert bd.upper == pytest.approx(h * math.exp(-0.5 * 0.04 * 1.5 ** 3 / 3), rel=1e-13)
    assert bd.lower < bd.upper


def test_density_matches_simulated_histogram(quadratic):
    cfg = McConfig(n_paths=50_000, n_steps=128, seed=21)
    emp = simulate_fpt(quadratic, 3.0, 50_000, 1000, seed=22)
    model = lambda t: np.array([e.value for e in cdf_curve(quadratic, t, cfg)])
    assert compare(emp, model) < 0.015


def test_expectation_decreases_pathwise_with_curvature(small_mc):
    # same unit bridges for every c: larger f'' gives a larger integral on every path
    vals = [expectation_term(PolynomialBoundary((1.0, 0.3, c)), 1.5, small_mc).value for c in (0.05, 0.1, 0.2, 0.4)]
    assert all(x > y for x, y in zip(vals, vals[1:]))
