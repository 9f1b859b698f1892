"""First-passage-time density, distribution and Jensen bounds.

For a convex boundary ``f`` with ``f(0) = a > 0`` the hitting time ``T`` of a
standard Brownian motion started at 0 has density

    p(s) = E[exp(-int_0^s f''(u) X_u du)] * exp(-a f'(0) - 1/2 int_0^s f'(u)^2 du) * h(s, a)

where ``X`` is the Bessel(3) bridge from ``a`` to 0 on ``[0, s]`` and ``h`` is
the fixed-level hitting density.  The expectation lies in ``[0, 1]``, which
gives the upper bound; Jensen's inequality moves the expectation inside the
exponential for the lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import legendre

from .boundary import Boundary, level_density, require_valid
from .bridge import functional_moments, trapezoid_weights
from .errors import ArgumentError
from .montecarlo import STREAM_BRIDGE, STREAM_BRIDGE_MEAN, Estimate, McConfig, Moments

__all__ = [
    "Bounds",
    "DensityCurve",
    "bounds_at",
    "cdf",
    "cdf_curve",
    "density_at",
    "density_curve",
    "drift_factor",
    "expectation_term",
    "LOWER_BOUND_INTERVALS",
]

LOWER_BOUND_INTERVALS = 64


class Bounds(NamedTuple):
    lower: float
    upper: float
    lower_stderr: float = 0.0


@dataclass(frozen=True)
class DensityCurve:
    times: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    lower_stderr: np.ndarray
    n_samples: int

    @property
    def estimates(self) -> list[Estimate]:
        return [Estimate(float(v), float(e), self.n_samples) for v, e in zip(self.density, self.stderr)]


def drift_factor(b: Boundary, s):
    """``h(s, a) exp(-a f'(0) - 1/2 int_0^s f'^2)``: the density when ``f'' == 0``."""
    s = np.asarray(s, dtype=float)
    a = b.a
    return level_density(s, a) * np.exp(-a * b.fp(0.0) - 0.5 * b.integral_fp_sq(0.0, s))


def _check_s(s_nodes):
    s_nodes = np.atleast_1d(np.asarray(s_nodes, dtype=float))
    if s_nodes.size == 0 or np.any(~(s_nodes > 0.0)) or np.any(~np.isfinite(s_nodes)):
        raise ArgumentError("evaluation times must be finite and > 0")
    return s_nodes


def _expectation_moments(b: Boundary, s_nodes, cfg: McConfig, combos=None) -> Moments:
    """Per-horizon moments of ``exp(-int_0^s f'' X)`` plus optional combinations."""
    s_nodes = _check_s(s_nodes)
    require_valid(b, float(s_nodes.max()))
    width = s_nodes.size + (0 if combos is None else combos.shape[0])
    if b.is_linear:
        mom = Moments(width)
        mom.n = cfg.n_paths
        mom.mean = np.ones(s_nodes.size)
        if combos is not None:
            mom.mean = np.concatenate([mom.mean, combos.sum(axis=1)])
        return mom
    grid = np.linspace(0.0, 1.0, cfg.n_steps + 1)
    weights = _fpp_weights(b, s_nodes, grid)
    return functional_moments(
        b.a, s_nodes, grid, weights, cfg, apply_exp=True, purpose=STREAM_BRIDGE, combos=combos
    )


def _fpp_weights(b, s_nodes, grid):
    tw = trapezoid_weights(grid)
    times = s_nodes[:, None] * grid[None, :]
    return s_nodes[:, None] * tw[None, :] * np.asarray(b.fpp(times))


def expectation_term(b: Boundary, s: float, cfg: McConfig) -> Estimate:
    """``E[exp(-int_0^s f''(u) X_u du)]`` over exact bridge paths from ``b.a``."""
    return _expectation_moments(b, s, cfg).estimates()[0]


def density_at(b: Boundary, s: float, cfg: McConfig) -> Estimate:
    """First-passage density at time ``s``."""
    est = expectation_term(b, s, cfg)
    return est.scaled(float(drift_factor(b, s)))


# -- distribution -----------------------------------------------------------


def _breakpoints(a: float, t_max: float, n_panels: int) -> np.ndarray:
    mode = a * a / 3.0
    start = [0.0]
    lo = 0.0
    if mode < t_max:
        start.append(mode)
        lo = mode
    return np.concatenate([start, np.linspace(lo, t_max, n_panels + 1)[1:]])


def _cumulative_rule(breaks: np.ndarray, n_quad: int, times: np.ndarray):
    """Nodes and a matrix ``C`` with ``C @ g(nodes) ~= int_0^{times} g``.

    Each panel uses ``n_quad`` Gauss-Legendre nodes.  Inside a panel the
    integral up to ``t`` is that of the degree ``n_quad - 1`` interpolant
    through the nodes, which reduces to the Gauss-Legendre rule at the
    panel's right end.
    """
    x, w = legendre.leggauss(n_quad)
    vinv = np.linalg.inv(legendre.legvander(x, n_quad - 1))
    antideriv = [legendre.legint(np.eye(n_quad)[k], lbnd=-1) for k in range(n_quad)]
    n_panels = breaks.size - 1
    nodes = np.concatenate(
        [0.5 * (breaks[p + 1] - breaks[p]) * (x + 1.0) + breaks[p] for p in range(n_panels)]
    )
    full = np.concatenate([0.5 * (breaks[p + 1] - breaks[p]) * w for p in range(n_panels)])
    mat = np.zeros((times.size, nodes.size))
    for i, t in enumerate(times):
        if t <= 0.0:
            continue
        p = min(int(np.searchsorted(breaks, t, side="left")) - 1, n_panels - 1)
        lo, hi = breaks[p], breaks[p + 1]
        mat[i, : p * n_quad] = full[: p * n_quad]
        xi = 2.0 * (t - lo) / (hi - lo) - 1.0
        if xi >= 1.0:
            mat[i, p * n_quad : (p + 1) * n_quad] = full[p * n_quad : (p + 1) * n_quad]
        else:
            q = np.array([legendre.legval(xi, c) for c in antideriv])
            mat[i, p * n_quad : (p + 1) * n_quad] = 0.5 * (hi - lo) * (q @ vinv)
    return nodes, mat


def cdf_curve(
    b: Boundary,
    times: Sequence[float],
    cfg: McConfig,
    n_quad: int = 32,
    n_panels: int = 4,
) -> list[Estimate]:
    """``P(T < t)`` at every ``t`` in ``times`` from a single Monte Carlo pass.

    The density is integrated with composite Gauss-Legendre on
    ``(0, a^2/3]`` followed by ``n_panels`` equal panels up to ``max(times)``.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size == 0 or np.any(times < 0.0) or not np.all(np.isfinite(times)):
        raise ArgumentError("cdf times must be finite and >= 0")
    if n_quad < 16:
        raise ArgumentError(f"n_quad must be >= 16, got {n_quad}")
    if n_panels < 1:
        raise ArgumentError(f"n_panels must be >= 1, got {n_panels}")
    t_max = float(times.max())
    if not t_max > 0.0:
        return [Estimate(0.0, 0.0, cfg.n_paths) for _ in times]
    nodes, mat = _cumulative_rule(_breakpoints(b.a, t_max, n_panels), n_quad, times)
    combos = mat * drift_factor(b, nodes)[None, :]
    mom = _expectation_moments(b, nodes, cfg, combos=combos)
    values = mom.mean[nodes.size :]
    errs = mom.stderr()[nodes.size :]
    return [Estimate(float(np.clip(v, 0.0, 1.0)), float(e), mom.n) for v, e in zip(values, errs)]


def cdf(b: Boundary, t: float, cfg: McConfig, n_quad: int = 32) -> Estimate:
    """``P(T < t)`` by Gauss-Legendre quadrature of the density over ``(0, t]``."""
    if not t > 0.0:
        raise ArgumentError(f"t must be > 0, got {t!r}")
    return cdf_curve(b, [t], cfg, n_quad=n_quad, n_panels=1)[0]


# -- bounds -----------------------------------------------------------------


def _jensen_exponent(b: Boundary, s_nodes, cfg: McConfig) -> Moments:
    """Moments of ``int_0^s f''(u) X_u du`` on the coarse lower-bound grid.

    The mean equals the trapezoid of ``f''(u) E[X_u]`` over
    ``LOWER_BOUND_INTERVALS + 1`` points, i.e. the bridge mean integrated
    against ``f''``.
    """
    grid = np.linspace(0.0, 1.0, LOWER_BOUND_INTERVALS + 1)
    weights = _fpp_weights(b, s_nodes, grid)
    return functional_moments(
        b.a, s_nodes, grid, weights, cfg, apply_exp=False, purpose=STREAM_BRIDGE_MEAN
    )


def _bounds(b: Boundary, s_nodes, cfg: McConfig):
    s_nodes = _check_s(s_nodes)
    require_valid(b, float(s_nodes.max()))
    upper = np.asarray(drift_factor(b, s_nodes), dtype=float).reshape(s_nodes.shape)
    if b.is_linear:
        return upper.copy(), upper, np.zeros_like(upper)
    mom = _jensen_exponent(b, s_nodes, cfg)
    lower = upper * np.exp(-mom.mean)
    return lower, upper, lower * mom.stderr()


def bounds_at(b: Boundary, s: float, cfg: McConfig) -> Bounds:
    """Lower and upper bounds on the first-passage density at ``s``."""
    lower, upper, err = _bounds(b, s, cfg)
    return Bounds(float(lower[0]), float(upper[0]), float(err[0]))


def density_curve(b: Boundary, t_max: float, n_points: int, cfg: McConfig) -> DensityCurve:
    """Density and bounds on ``s_i = i t_max / n_points``, ``i = 1..n_points``.

    All grid points share the same unit bridges, so the curve is smooth in
    ``s`` and reproducible for a given seed.
    """
    if not t_max > 0.0:
        raise ArgumentError(f"t_max must be > 0, got {t_max!r}")
    if int(n_points) < 2:
        raise ArgumentError(f"n_points must be >= 2, got {n_points!r}")
    times = t_max * np.arange(1, int(n_points) + 1) / int(n_points)
    mom = _expectation_moments(b, times, cfg)
    factor = drift_factor(b, times)
    lower, upper, lower_err = _bounds(b, times, cfg)
    return DensityCurve(
        times=times,
        density=mom.mean * factor,
        stderr=mom.stderr() * factor,
        lower=lower,
        upper=upper,
        lower_stderr=lower_err,
        n_samples=mom.n,
    )
