"""Deterministic Monte Carlo plumbing.

Paths are processed in fixed-size chunks.  Chunk ``c`` of a computation
tagged ``purpose`` draws from a Philox (counter-based) stream keyed by
``(seed, purpose, c)``, so path ``i`` always sees the same random numbers no
matter how many workers run or in which order chunks finish.  Per-chunk
moments are merged in chunk order with Chan's update, which makes the final
estimate bitwise reproducible.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import ArgumentError

__all__ = [
    "CHUNK_PATHS",
    "Estimate",
    "McConfig",
    "Moments",
    "chunk_sizes",
    "chunk_rng",
    "run_chunks",
]

CHUNK_PATHS = 4096
_U64 = 2 ** 64

# stream purposes; distinct tags give statistically independent streams
STREAM_BRIDGE = 1
STREAM_BRIDGE_MEAN = 2
STREAM_EULER = 3
STREAM_FPT_SIM = 4


@dataclass(frozen=True)
class McConfig:
    n_paths: int = 100_000
    n_steps: int = 256
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if int(self.n_paths) < 1:
            raise ArgumentError(f"n_paths must be >= 1, got {self.n_paths}")
        if int(self.n_steps) < 2:
            raise ArgumentError(f"n_steps must be >= 2, got {self.n_steps}")
        if not 0 <= int(self.seed) < _U64:
            raise ArgumentError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if int(self.workers) < 1:
            raise ArgumentError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo estimate: ``stderr = sample std / sqrt(n_samples)``."""

    value: float
    stderr: float
    n_samples: int

    def scaled(self, factor: float) -> "Estimate":
        return Estimate(self.value * factor, self.stderr * abs(factor), self.n_samples)

    def __float__(self) -> float:
        return float(self.value)


class Moments:
    """Running count/mean/M2 for a vector of statistics (Chan et al. merge)."""

    def __init__(self, width: int):
        self.n = 0
        self.mean = np.zeros(width)
        self.m2 = np.zeros(width)

    @classmethod
    def of(cls, samples: np.ndarray) -> "Moments":
        """Moments of a ``(n, width)`` block of per-path samples."""
        samples = np.asarray(samples, dtype=float)
        out = cls(samples.shape[1])
        out.n = samples.shape[0]
        out.mean = samples.mean(axis=0)
        dev = samples - out.mean
        out.m2 = np.einsum("ij,ij->j", dev, dev)
        return out

    def merge(self, other: "Moments") -> None:
        if other.n == 0:
            return
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.n / n)
        self.m2 = self.m2 + other.m2 + delta * delta * (self.n * other.n / n)
        self.n = n

    def stderr(self) -> np.ndarray:
        if self.n < 2:
            return np.zeros_like(self.mean)
        var = np.maximum(self.m2, 0.0) / (self.n - 1)
        return np.sqrt(var / self.n)

    def estimates(self) -> list[Estimate]:
        return [Estimate(float(m), float(e), self.n) for m, e in zip(self.mean, self.stderr())]


def chunk_sizes(n_paths: int, chunk: int = CHUNK_PATHS) -> list[int]:
    full, rest = divmod(int(n_paths), chunk)
    return [chunk] * full + ([rest] if rest else [])


def chunk_rng(seed: int, purpose: int, chunk_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(purpose), int(chunk_index)))
    return np.random.Generator(np.random.Philox(ss))


def run_chunks(
    work: Callable[[int, int], Moments],
    n_paths: int,
    workers: int = 1,
    chunk: int = CHUNK_PATHS,
) -> Moments:
    """Run ``work(chunk_index, chunk_size)`` over all chunks and merge in order."""
    sizes = chunk_sizes(n_paths, chunk)
    if workers <= 1 or len(sizes) == 1:
        parts: Iterable[Moments] = (work(i, m) for i, m in enumerate(sizes))
        return _merge_all(parts)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(work, range(len(sizes)), sizes))
    return _merge_all(parts)


def _merge_all(parts: Iterable[Moments]) -> Moments:
    total = None
    for p in parts:
        if total is None:
            total = Moments(p.mean.size)
        total.merge(p)
    return total

