"""CSV/JSON serialisation.  Numbers are written with 17 significant digits."""

from __future__ import annotations

import json
from typing import IO, Iterable, Sequence

import numpy as np

from .bridge import PathGrid
from .fpt import DensityCurve
from .oracle import EmpiricalDistribution
from .pde import Field2D

__all__ = [
    "fmt",
    "write_csv",
    "dump_json",
    "density_curve_rows",
    "field_rows",
    "field_metadata",
    "empirical_rows",
    "path_rows",
    "DENSITY_HEADER",
]

DENSITY_HEADER = ("s", "density", "stderr", "lower", "upper")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(stream: IO[str], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(fmt(v) for v in row) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def dump_json(stream: IO[str], obj) -> None:
    stream.write(json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=True) + "\n")


def density_curve_rows(curve: DensityCurve):
    return zip(curve.times, curve.density, curve.stderr, curve.lower, curve.upper)


def field_rows(fld: Field2D, stride: int = 1):
    t_idx = _strided(fld.t_grid.size, stride)
    a_idx = _strided(fld.a_grid.size, stride)
    for i in t_idx:
        for j in a_idx:
            yield fld.t_grid[i], fld.a_grid[j], fld.values[i, j]


def _strided(n: int, stride: int) -> list[int]:
    idx = list(range(0, n, max(1, int(stride))))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return idx


def field_metadata(fld: Field2D, boundary: dict, residual: float, **extra) -> dict:
    meta = {
        "equation": fld.equation,
        "grid": {
            "t_min": fld.t_grid[0],
            "t_max": fld.t_grid[-1],
            "n_t": fld.t_grid.size - 1,
            "a_min": fld.a_grid[0],
            "a_max": fld.a_grid[-1],
            "n_a": fld.a_grid.size - 1,
        },
        "boundary": boundary,
        "residual": residual,
    }
    meta.update(extra)
    return meta


def empirical_rows(e: EmpiricalDistribution):
    return zip(e.bin_edges[:-1], e.bin_edges[1:], e.counts)


def path_rows(paths: Sequence[PathGrid]):
    for i, path in enumerate(paths):
        for t, x in zip(path.times, path.values):
            yield i, t, x
