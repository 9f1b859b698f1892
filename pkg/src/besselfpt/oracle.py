"""Independent ground truth for first-passage times.

* :func:`simulate_fpt` -- direct simulation of Brownian hitting times with the
  Brownian-bridge crossing correction between grid points.
* :func:`linear_density` / :func:`linear_cdf` -- closed forms for straight
  boundaries ``f(t) = a + slope * t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr

from . import _kernels
from .boundary import Boundary, require_valid
from .errors import ArgumentError, DomainError
from .montecarlo import STREAM_FPT_SIM, chunk_rng, chunk_sizes

__all__ = [
    "EmpiricalDistribution",
    "simulate_fpt",
    "linear_density",
    "linear_cdf",
    "compare",
    "N_BINS",
]

N_BINS = 200
SIM_CHUNK = 1024


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Histogram of simulated hitting times on ``(0, horizon]``."""

    bin_edges: np.ndarray
    counts: np.ndarray
    n_paths_total: int
    n_not_hit: int

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if edges.ndim != 1 or edges.size != counts.size + 1:
            raise ArgumentError("need len(bin_edges) == len(counts) + 1")
        if np.any(np.diff(edges) <= 0.0):
            raise ArgumentError("bin edges must increase strictly")
        if int(counts.sum()) + int(self.n_not_hit) != int(self.n_paths_total):
            raise ArgumentError("counts + n_not_hit must equal n_paths_total")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def horizon(self) -> float:
        return float(self.bin_edges[-1])

    def cdf_at_edges(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.counts)]) / self.n_paths_total

    def cdf(self, t):
        """Right-continuous empirical CDF on the histogram (exact at bin edges)."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.bin_edges, t, side="right") - 1
        idx = np.clip(idx, 0, self.counts.size)
        return self.cdf_at_edges()[idx]


def simulate_fpt(
    b: Boundary,
    horizon: float,
    n_paths: int,
    n_steps: int,
    seed: int,
    correction: bool = True,
    n_bins: int = N_BINS,
    workers: int = 1,
) -> EmpiricalDistribution:
    """Simulate ``T = inf{t : B_t = f(t)}`` for ``n_paths`` Brownian paths on ``[0, horizon]``.

    Paths use exact Gaussian increments on ``n_steps`` uniform steps.  Within a
    step the boundary is frozen to its chord and a crossing is declared with
    probability ``exp(-2 d_k d_{k+1} / dt)`` (``d = f - B``) when ``correction``
    is on.  Hits are stamped at step midpoints.
    """
    if not horizon > 0.0:
        raise ArgumentError(f"horizon must be > 0, got {horizon!r}")
    if int(n_paths) < 1 or int(n_steps) < 1 or int(n_bins) < 1:
        raise ArgumentError("n_paths, n_steps and n_bins must be positive")
    require_valid(b, horizon)
    n_steps = int(n_steps)
    dt = horizon / n_steps
    f_grid = np.ascontiguousarray(b.f(np.linspace(0.0, horizon, n_steps + 1)), dtype=float)
    f_grid[0] = b.a

    def work(c, m):
        rng = chunk_rng(seed, STREAM_FPT_SIM, c)
        z = rng.standard_normal((m, n_steps))
        u = rng.random((m, n_steps))
        out = np.empty(m)
        _kernels.first_passage_times(f_grid, dt, z, u, bool(correction), out)
        return out

    sizes = chunk_sizes(n_paths, SIM_CHUNK)
    if workers > 1 and len(sizes) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(len(sizes)), sizes))
    else:
        parts = [work(c, m) for c, m in enumerate(sizes)]
    times = np.concatenate(parts)
    hit = np.isfinite(times)
    edges = np.linspace(0.0, horizon, int(n_bins) + 1)
    counts, _ = np.histogram(times[hit], bins=edges)
    return EmpiricalDistribution(edges, counts, int(n_paths), int((~hit).sum()))


def linear_density(a: float, slope: float, s):
    """Hitting density of ``a + slope * t``: ``a / sqrt(2 pi s^3) exp(-(a + slope s)^2 / (2 s))``."""
    if not a > 0.0:
        raise ArgumentError(f"a must be > 0, got {a!r}")
    s_arr = np.asarray(s, dtype=float)
    if np.any(~(s_arr > 0.0)):
        raise DomainError(f"s must be > 0, got {s!r}")
    out = a / np.sqrt(2.0 * np.pi * s_arr ** 3) * np.exp(-((a + slope * s_arr) ** 2) / (2.0 * s_arr))
    return float(out) if out.ndim == 0 else out


def linear_cdf(a: float, slope: float, t):
    """``P(T <= t)`` for the straight boundary ``a + slope * t`` (Bachelier-Levy)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        rt = np.sqrt(t)
        val = ndtr(-(a + slope * t) / rt) + np.exp(-2.0 * a * slope) * ndtr((slope * t - a) / rt)
    val = np.where(t > 0.0, val, 0.0)
    return float(val) if val.ndim == 0 else val


def compare(e: EmpiricalDistribution, model_cdf: Callable) -> float:
    """Sup over bin edges of ``|empirical CDF - model CDF|``.

    ``model_cdf`` is called once with the array of bin edges.
    """
    model = np.asarray(model_cdf(e.bin_edges), dtype=float)
    return float(np.max(np.abs(e.cdf_at_edges() - model)))
