"""Sampling of the 3-dimensional Bessel bridge from ``a`` (time 0) to 0 (time s).

The exact sampler realises the bridge as the Euclidean norm of a
3-dimensional Brownian bridge from ``(a, 0, 0)`` to the origin.  Each
component is pinned with the sequential bridge transition

    beta(t_{k+1}) | beta(t_k) ~ N(beta(t_k) (s - t_{k+1}) / (s - t_k),
                                  (t_{k+1} - t_k) (s - t_{k+1}) / (s - t_k)),

which is exact in distribution on any grid.  Dividing by ``s - t`` turns the
recursion into a plain cumulative sum, so it vectorises over paths.

Bridges are generated on the unit interval and rescaled to ``[0, s]``
(``beta_s(t) = sqrt(s) beta_1(t / s)``); reusing the same unit bridges for
many horizons gives common random numbers across ``s``.

The Euler sampler discretises

    dX = dW + (1 / X - X / (s - t)) dt

and exists only as an independent cross-check of the exact construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .boundary import Boundary
from .errors import ArgumentError
from .montecarlo import (
    STREAM_BRIDGE,
    STREAM_BRIDGE_MEAN,
    STREAM_EULER,
    Estimate,
    McConfig,
    Moments,
    chunk_rng,
    run_chunks,
)

__all__ = [
    "PathGrid",
    "sample_exact",
    "sample_euler",
    "path_functional",
    "bridge_mean",
    "bridge_marginal",
    "functional_moments",
    "trapezoid_weights",
    "unit_bridges",
    "EULER_EPS",
]

EULER_EPS = 1e-8


@dataclass(frozen=True)
class PathGrid:
    """One path on the uniform grid ``t_k = k s / n_steps``."""

    s: float
    n_steps: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.n_steps + 1,):
            raise ArgumentError(
                f"expected {self.n_steps + 1} values, got shape {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.s, self.n_steps + 1)


def _check(a, s, n_steps, min_steps=2):
    if not (np.isfinite(a) and a > 0.0):
        raise ArgumentError(f"bridge start a must be > 0, got {a!r}")
    if not (np.isfinite(s) and s > 0.0):
        raise ArgumentError(f"bridge length s must be > 0, got {s!r}")
    if int(n_steps) < min_steps:
        raise ArgumentError(f"n_steps must be >= {min_steps}, got {n_steps!r}")


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    """Weights ``w`` with ``sum(w * y) == trapezoid(y, grid)``."""
    dx = np.diff(grid)
    w = np.zeros_like(grid, dtype=float)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


def unit_bridges(rng: np.random.Generator, n_paths: int, grid: np.ndarray) -> np.ndarray:
    """Three independent Brownian bridges 0 -> 0 on ``[0, 1]``.

    ``grid`` must increase from 0 to 1.  Returns shape ``(n_paths, 3, len(grid))``
    with exact zeros in the first and last column.
    """
    grid = np.asarray(grid, dtype=float)
    n_nodes = grid.size
    out = np.zeros((n_paths, 3, n_nodes))
    if n_nodes <= 2:
        return out
    rem = 1.0 - grid
    inner = slice(1, n_nodes - 1)
    # scale for gamma = beta / (1 - v): sqrt(var_k) / (1 - v_{k+1})
    var = np.diff(grid)[:-1] * rem[inner] / rem[:-2]
    scale = np.sqrt(var) / rem[inner]
    z = rng.standard_normal((n_paths, 3, n_nodes - 2))
    gamma = np.cumsum(z * scale, axis=-1)
    out[:, :, inner] = gamma * rem[inner]
    return out


def _norm_paths(a, s, grid, beta):
    x = a * (1.0 - grid) + np.sqrt(s) * beta[:, 0, :]
    vals = np.sqrt(x * x + s * (beta[:, 1, :] ** 2 + beta[:, 2, :] ** 2))
    vals[:, 0] = a
    vals[:, -1] = 0.0
    return vals


def sample_exact(a: float, s: float, n_steps: int, rng: np.random.Generator) -> PathGrid:
    """One exact Bessel(3) bridge path from ``a`` to 0 on ``[0, s]``."""
    _check(a, s, n_steps)
    grid = np.linspace(0.0, 1.0, int(n_steps) + 1)
    beta = unit_bridges(rng, 1, grid)
    return PathGrid(float(s), int(n_steps), _norm_paths(a, s, grid, beta)[0])


def _euler_block(a, s, n_steps, z):
    n_paths = z.shape[0]
    dt = s / n_steps
    sq = np.sqrt(dt)
    out = np.empty((n_paths, n_steps + 1))
    x = np.full(n_paths, float(a))
    out[:, 0] = x
    for k in range(n_steps - 1):
        t = k * dt
        x = x + (1.0 / x - x / (s - t)) * dt + sq * z[:, k]
        x = np.where(x < EULER_EPS, 2.0 * EULER_EPS - x, x)
        out[:, k + 1] = x
    out[:, n_steps] = 0.0
    return out


def sample_euler(a: float, s: float, n_steps: int, rng: np.random.Generator) -> PathGrid:
    """Euler-Maruyama path of the bridge SDE, reflected at 1e-8, pinned to 0 at ``s``."""
    _check(a, s, n_steps, min_steps=8)
    z = rng.standard_normal((1, int(n_steps) - 1))
    return PathGrid(float(s), int(n_steps), _euler_block(a, s, int(n_steps), z)[0])


def bridge_marginal(
    a: float,
    s: float,
    n_steps: int,
    index: int,
    n_paths: int,
    seed: int,
    method: str = "exact",
    chunk: int = 8192,
) -> np.ndarray:
    """Samples of ``X(t_index)`` from ``n_paths`` full paths of either sampler."""
    _check(a, s, n_steps, min_steps=8 if method == "euler" else 2)
    if not 0 <= index <= n_steps:
        raise ArgumentError(f"index {index} outside grid 0..{n_steps}")
    grid = np.linspace(0.0, 1.0, n_steps + 1)
    parts = []
    for c, start in enumerate(range(0, n_paths, chunk)):
        m = min(chunk, n_paths - start)
        if method == "exact":
            rng = chunk_rng(seed, STREAM_BRIDGE, c)
            parts.append(_norm_paths(a, s, grid, unit_bridges(rng, m, grid))[:, index])
        elif method == "euler":
            rng = chunk_rng(seed, STREAM_EULER, c)
            z = rng.standard_normal((m, n_steps - 1))
            parts.append(_euler_block(a, s, n_steps, z)[:, index])
        else:
            raise ArgumentError(f"unknown sampler {method!r}")
    return np.concatenate(parts)


def path_functional(path: PathGrid, b: Boundary) -> float:
    """Trapezoidal ``int_0^s f''(u) X(u) du`` along ``path``."""
    t = path.times
    return float(np.dot(trapezoid_weights(t) * np.asarray(b.fpp(t)), path.values))


def functional_moments(
    a: float,
    s_nodes: np.ndarray,
    grid: np.ndarray,
    weights: np.ndarray,
    cfg: McConfig,
    *,
    apply_exp: bool,
    purpose: int = STREAM_BRIDGE,
    combos: np.ndarray | None = None,
) -> Moments:
    """Moments of ``sum_k weights[j, k] X_{s_j}(s_j grid_k)`` over bridge paths.

    ``grid`` is a unit-interval grid shared by all horizons ``s_nodes``; each
    path uses the same unit bridges for every horizon.  With ``apply_exp``
    the per-path statistic is ``exp(-sum)``.  ``combos`` (``m x J``) appends
    ``m`` fixed linear combinations of the per-horizon statistics, whose
    standard errors then account for the correlation between horizons.
    """
    s_nodes = np.ascontiguousarray(s_nodes, dtype=float)
    grid = np.ascontiguousarray(grid, dtype=float)
    weights = np.ascontiguousarray(weights, dtype=float)
    if weights.shape != (s_nodes.size, grid.size):
        raise ArgumentError("weights must have shape (len(s_nodes), len(grid))")
    aw = a * (1.0 - grid)
    sqrt_s = np.sqrt(s_nodes)

    def work(chunk_index: int, m: int) -> Moments:
        rng = chunk_rng(cfg.seed, purpose, chunk_index)
        beta = unit_bridges(rng, m, grid)
        beta1 = np.ascontiguousarray(beta[:, 0, :])
        r2 = beta[:, 1, :] ** 2 + beta[:, 2, :] ** 2
        out = np.empty((m, s_nodes.size))
        _kernels.weighted_norm_functional(aw, beta1, r2, sqrt_s, s_nodes, weights, apply_exp, out)
        if combos is not None:
            out = np.hstack([out, out @ combos.T])
        return Moments.of(out)

    return run_chunks(work, cfg.n_paths, cfg.workers)


def bridge_mean(a: float, s: float, u: float, cfg: McConfig) -> Estimate:
    """Monte Carlo estimate of ``E[X(u)]`` for the bridge from ``a`` to 0 on ``[0, s]``."""
    _check(a, s, cfg.n_steps)
    if not 0.0 <= u <= s:
        raise ArgumentError(f"u must lie in [0, s], got u={u!r}, s={s!r}")
    if u == 0.0:
        return Estimate(float(a), 0.0, cfg.n_paths)
    if u == s:
        return Estimate(0.0, 0.0, cfg.n_paths)
    grid = np.array([0.0, u / s, 1.0])
    weights = np.array([[0.0, 1.0, 0.0]])
    mom = functional_moments(
        a, np.array([s]), grid, weights, cfg, apply_exp=False, purpose=STREAM_BRIDGE_MEAN
    )
    return mom.estimates()[0]
