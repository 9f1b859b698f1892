"""First-passage times of Brownian motion to convex moving boundaries.

Every command reads one JSON config and writes machine-readable output::

    besselfpt density  --config run.json --seed 7 --out density.csv
    besselfpt validate --config run.json --out validate.csv   # + validate.json
    besselfpt density  --config run.json --print-config

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import io
from .boundary import Boundary, boundary_from_dict, require_valid
from .bridge import sample_exact
from .errors import ArgumentError, ConfigError, DomainError, NumericalError, ValidationError
from .fpt import cdf_curve, density_curve, expectation_term
from .montecarlo import McConfig, chunk_rng
from .oracle import compare, linear_cdf, simulate_fpt
from .pde import GridSpec, pde_residual, solve_cauchy

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

COMMANDS = ("density", "cdf", "bounds", "sample", "validate", "pde")
STREAM_SAMPLE = 5


def _default_grid() -> dict:
    return {"n_t": 2000, "n_a": 400, "a_min": 1e-3, "a_max": None}


@dataclass
class RunConfig:
    boundary: dict | None = None
    s: float = 1.0
    t_max: float = 3.0
    n_points: int = 20
    horizon: float = 3.0
    n_paths: int = 100_000
    n_steps: int = 256
    seed: int | None = None
    n_quad: int = 32
    n_panels: int = 4
    sim_paths: int = 100_000
    sim_steps: int = 2000
    correction: bool = True
    tolerance: float = 0.01
    grid: dict = field(default_factory=_default_grid)
    field_stride: int = 10
    out: str | None = None
    format: str = "csv"
    gnuplot: bool = False

    @classmethod
    def from_dict(cls, data: Any) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        grid = _default_grid()
        if not isinstance(cfg.grid, dict):
            raise ConfigError("grid must be an object")
        bad = set(cfg.grid) - set(grid)
        if bad:
            raise ConfigError(f"unknown grid keys: {sorted(bad)}")
        grid.update(cfg.grid)
        cfg.grid = grid
        cfg._check_types()
        return cfg

    def _check_types(self) -> None:
        for name in ("s", "t_max", "horizon", "tolerance"):
            val = getattr(self, name)
            if isinstance(val, bool) or not isinstance(val, (int, float)) or not val > 0:
                raise ConfigError(f"{name} must be a positive number, got {val!r}")
        for name in ("n_points", "n_paths", "n_steps", "n_quad", "n_panels", "sim_paths", "sim_steps", "field_stride"):
            val = getattr(self, name)
            if isinstance(val, bool) or not isinstance(val, int) or val < 1:
                raise ConfigError(f"{name} must be a positive integer, got {val!r}")
        if self.seed is not None and (isinstance(self.seed, bool) or not isinstance(self.seed, int)):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be 'csv' or 'json', got {self.format!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="besselfpt", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides config)")
    p.add_argument("--workers", type=int, default=1, help="worker threads; never changes results")
    p.add_argument("--out", type=Path, help="output path (default: stdout)")
    p.add_argument("--print-config", action="store_true", help="print the effective config and exit")
    return p


def _load(args) -> RunConfig:
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    try:
        cfg = RunConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = str(args.out)
    return cfg


def _boundary(cfg: RunConfig) -> Boundary:
    if cfg.boundary is None:
        raise ConfigError("config has no 'boundary'")
    return boundary_from_dict(cfg.boundary)


def _mc(cfg: RunConfig, workers: int) -> McConfig:
    if cfg.seed is None:
        raise ConfigError("no seed: pass --seed or set 'seed' in the config")
    try:
        return McConfig(cfg.n_paths, cfg.n_steps, cfg.seed, workers)
    except ArgumentError as exc:
        raise ConfigError(str(exc)) from None


@contextmanager
def _output(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _sidecar(path: str | None) -> str | None:
    return None if path is None else str(Path(path).with_suffix(".json"))


# -- commands ---------------------------------------------------------------


def cmd_density(cfg: RunConfig, workers: int = 1) -> int:
    b = _boundary(cfg)
    curve = density_curve(b, cfg.t_max, cfg.n_points, _mc(cfg, workers))
    with _output(cfg.out) as fh:
        if cfg.format == "json":
            io.dump_json(fh, {name: list(col) for name, col in zip(io.DENSITY_HEADER, zip(*io.density_curve_rows(curve)))})
        else:
            io.write_csv(fh, io.DENSITY_HEADER, io.density_curve_rows(curve))
    if cfg.gnuplot and cfg.out is not None and cfg.format == "csv":
        script = Path(cfg.out).with_suffix(".gp")
        script.write_text(
            "set datafile separator ','\n"
            "set key autotitle columnhead\n"
            "set xlabel 's'\n"
            f"plot '{Path(cfg.out).name}' using 1:2 with lines, '' using 1:4 with lines dt 2, '' using 1:5 with lines dt 3\n"
        )
    return EXIT_OK


def cmd_cdf(cfg: RunConfig, workers: int = 1) -> int:
    b = _boundary(cfg)
    times = cfg.t_max * np.arange(1, cfg.n_points + 1) / cfg.n_points
    ests = cdf_curve(b, times, _mc(cfg, workers), n_quad=cfg.n_quad, n_panels=cfg.n_panels)
    rows = [(t, e.value, e.stderr) for t, e in zip(times, ests)]
    with _output(cfg.out) as fh:
        if cfg.format == "json":
            io.dump_json(fh, {"t": times, "cdf": [r[1] for r in rows], "stderr": [r[2] for r in rows]})
        else:
            io.write_csv(fh, ("t", "cdf", "stderr"), rows)
    return EXIT_OK


def cmd_bounds(cfg: RunConfig, workers: int = 1) -> int:
    b = _boundary(cfg)
    curve = density_curve(b, cfg.t_max, cfg.n_points, _mc(cfg, workers))
    slack = 3.0 * np.sqrt(curve.stderr ** 2 + curve.lower_stderr ** 2)
    lower_ok = curve.lower - slack <= curve.density
    upper_ok = curve.density <= curve.upper + 3.0 * curve.stderr
    header = ("s", "density", "stderr", "lower", "upper", "lower_stderr", "lower_ok", "upper_ok")
    rows = list(zip(curve.times, curve.density, curve.stderr, curve.lower, curve.upper, curve.lower_stderr, lower_ok, upper_ok))
    with _output(cfg.out) as fh:
        if cfg.format == "json":
            io.dump_json(fh, {name: [r[i] for r in rows] for i, name in enumerate(header)})
        else:
            io.write_csv(fh, header, rows)
    return EXIT_OK


def cmd_sample(cfg: RunConfig, workers: int = 1) -> int:
    b = _boundary(cfg)
    require_valid(b, cfg.s)
    mc = _mc(cfg, workers)
    paths = [sample_exact(b.a, cfg.s, mc.n_steps, chunk_rng(mc.seed, STREAM_SAMPLE, i)) for i in range(mc.n_paths)]
    with _output(cfg.out) as fh:
        if cfg.format == "json":
            io.dump_json(fh, {"s": cfg.s, "n_steps": mc.n_steps, "paths": [p.values for p in paths]})
        else:
            io.write_csv(fh, ("path", "t", "value"), io.path_rows(paths))
    return EXIT_OK


def cmd_validate(cfg: RunConfig, workers: int = 1) -> int:
    b = _boundary(cfg)
    mc = _mc(cfg, workers)
    emp = simulate_fpt(b, cfg.horizon, cfg.sim_paths, cfg.sim_steps, mc.seed, cfg.correction, workers=workers)
    if b.is_linear:
        slope = float(b.fp(0.0))
        model = np.asarray(linear_cdf(b.a, slope, emp.bin_edges))
        model_name = "closed-form linear boundary"
    else:
        ests = cdf_curve(b, emp.bin_edges, mc, n_quad=cfg.n_quad, n_panels=cfg.n_panels)
        model = np.array([e.value for e in ests])
        model_name = "bessel-bridge quadrature"
    sup = compare(emp, lambda edges: model)
    summary = {
        "boundary": cfg.boundary,
        "horizon": cfg.horizon,
        "model": model_name,
        "n_not_hit": emp.n_not_hit,
        "n_paths": emp.n_paths_total,
        "sup_distance": sup,
        "tolerance": cfg.tolerance,
        "verdict": "pass" if sup < cfg.tolerance else "fail",
    }
    emp_cdf = emp.cdf_at_edges()
    rows = [(lo, hi, c, emp_cdf[i + 1], model[i + 1]) for i, (lo, hi, c) in enumerate(io.empirical_rows(emp))]
    header = ("bin_left", "bin_right", "count", "empirical_cdf", "model_cdf")
    with _output(cfg.out) as fh:
        if cfg.format == "json":
            io.dump_json(fh, dict(summary, bins={name: [r[i] for r in rows] for i, name in enumerate(header)}))
        else:
            io.write_csv(fh, header, rows)
    if cfg.format == "csv":
        side = _sidecar(cfg.out)
        if side is not None:
            with open(side, "w", newline="", encoding="utf-8") as fh:
                io.dump_json(fh, summary)
    print(f"sup-distance {sup:.6g} ({summary['verdict']}, tolerance {cfg.tolerance})", file=sys.stderr)
    return EXIT_OK


def cmd_pde(cfg: RunConfig, workers: int = 1) -> int:
    b = _boundary(cfg)
    mc = _mc(cfg, workers)
    try:
        grid = GridSpec(**cfg.grid)
    except TypeError as exc:
        raise ConfigError(f"bad grid: {exc}") from None
    fld = solve_cauchy(b, cfg.s, grid)
    residual = pde_residual(fld, b, cfg.s)
    v0 = fld.value_at(0, b.a)
    est = expectation_term(b, cfg.s, mc)
    meta = io.field_metadata(
        fld,
        cfg.boundary,
        residual,
        s=cfg.s,
        v0=v0,
        monte_carlo=est.value,
        monte_carlo_stderr=est.stderr,
        gap=abs(v0 - est.value),
    )
    with _output(cfg.out) as fh:
        if cfg.format == "json":
            rows = list(io.field_rows(fld, cfg.field_stride))
            io.dump_json(fh, dict(meta, field={"t": [r[0] for r in rows], "a": [r[1] for r in rows], "value": [r[2] for r in rows]}))
        else:
            io.write_csv(fh, ("t", "a", "value"), io.field_rows(fld, cfg.field_stride))
    if cfg.format == "csv":
        side = _sidecar(cfg.out)
        if side is not None:
            with open(side, "w", newline="", encoding="utf-8") as fh:
                io.dump_json(fh, meta)
    return EXIT_OK


_HANDLERS = {
    "density": cmd_density,
    "cdf": cmd_cdf,
    "bounds": cmd_bounds,
    "sample": cmd_sample,
    "validate": cmd_validate,
    "pde": cmd_pde,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load(args)
        if args.print_config:
            io.dump_json(sys.stdout, cfg.to_dict())
            return EXIT_OK
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        return _HANDLERS[args.command](cfg, args.workers)
    except (ConfigError, ValidationError, ArgumentError, DomainError) as exc:
        print(f"besselfpt: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"besselfpt: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
