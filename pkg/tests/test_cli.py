import csv
import json

import numpy as np
import pytest

from besselfpt import cli
from besselfpt.errors import NumericalError
from besselfpt.oracle import linear_cdf

QUAD = {"kind": "polynomial", "coeffs": [1.0, 0.0, 0.1]}
LINEAR = {"kind": "polynomial", "coeffs": [1.0, 0.5]}
SMALL = {"n_paths": 2000, "n_steps": 32, "n_points": 8, "sim_paths": 2000, "sim_steps": 200}


def run(tmp_path, command, config, *extra, name="out.csv"):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    out = tmp_path / name
    code = cli.main([command, "--config", str(cfg_path), "--out", str(out), *extra])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_density_csv_and_gnuplot(tmp_path):
    code, out = run(tmp_path, "density", dict(SMALL, boundary=QUAD, seed=1, gnuplot=True))
    assert code == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["s", "density", "stderr", "lower", "upper"]
    assert len(rows) == 8 and float(rows[-1]["s"]) == 3.0
    assert (tmp_path / "out.gp").read_text().startswith("set datafile")


def test_density_json(tmp_path):
    code, out = run(tmp_path, "density", dict(SMALL, boundary=QUAD, seed=1, format="json"), name="out.json")
    assert code == 0
    data = json.loads(out.read_text())
    assert set(data) == {"s", "density", "stderr", "lower", "upper"} and len(data["s"]) == 8


def test_cdf_linear_is_closed_form(tmp_path):
    code, out = run(tmp_path, "cdf", dict(SMALL, boundary=LINEAR, seed=1))
    assert code == 0
    rows = read_csv(out)
    t = np.array([float(r["t"]) for r in rows])
    np.testing.assert_allclose([float(r["cdf"]) for r in rows], linear_cdf(1.0, 0.5, t), atol=1e-8)


def test_bounds_flags(tmp_path):
    code, out = run(tmp_path, "bounds", dict(SMALL, boundary=QUAD, seed=2))
    assert code == 0
    rows = read_csv(out)
    assert all(r["lower_ok"] == "true" and r["upper_ok"] == "true" for r in rows)


def test_sample_paths(tmp_path):
    code, out = run(tmp_path, "sample", {"boundary": QUAD, "seed": 3, "n_paths": 3, "n_steps": 10, "s": 2.0})
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 33
    first = [r for r in rows if r["path"] == "0"]
    assert float(first[0]["value"]) == 1.0 and float(first[-1]["value"]) == 0.0
    assert float(first[-1]["t"]) == 2.0


def test_validate_linear_passes(tmp_path):
    cfg = {"boundary": LINEAR, "seed": 4, "horizon": 2.0, "sim_paths": 20_000, "sim_steps": 1000, "tolerance": 0.015}
    code, out = run(tmp_path, "validate", cfg)
    assert code == 0
    summary = json.loads((tmp_path / "out.json").read_text())
    assert summary["verdict"] == "pass" and summary["model"] == "closed-form linear boundary"
    assert len(read_csv(out)) == 200


def test_validate_curved(tmp_path):
    code, _ = run(tmp_path, "validate", dict(SMALL, boundary=QUAD, seed=5, horizon=2.0, tolerance=0.05))
    assert code == 0
    summary = json.loads((tmp_path / "out.json").read_text())
    assert summary["sup_distance"] < 0.05


def test_pde_field_and_sidecar(tmp_path):
    cfg = dict(SMALL, boundary=QUAD, seed=6, grid={"n_t": 100, "n_a": 64, "a_max": 7.0}, field_stride=8)
    code, out = run(tmp_path, "pde", cfg)
    assert code == 0
    meta = json.loads((tmp_path / "out.json").read_text())
    assert meta["equation"] == "cauchy" and meta["grid"]["n_a"] == 64
    assert meta["gap"] < 0.01
    rows = read_csv(out)
    assert {float(r["t"]) for r in rows} >= {0.0, 1.0}


def test_print_config(capsys):
    assert cli.main(["density", "--print-config", "--seed", "9"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["seed"] == 9 and data["n_paths"] == 100_000 and data["grid"]["n_t"] == 2000


def test_seed_flag_overrides_config(tmp_path):
    _, a = run(tmp_path, "cdf", dict(SMALL, boundary=QUAD, seed=1), "--seed", "7", name="a.csv")
    _, b = run(tmp_path, "cdf", dict(SMALL, boundary=QUAD, seed=7), name="b.csv")
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize(
    "config",
    [
        dict(SMALL, boundary=QUAD),  # no seed
        dict(SMALL, boundary=QUAD, seed=1, bogus=1),
        dict(SMALL, boundary=QUAD, seed=1, n_paths=0),
        dict(SMALL, boundary=QUAD, seed=1, s="x"),
        dict(SMALL, boundary=QUAD, seed=1, format="xml"),
        dict(SMALL, seed=1),  # no boundary
        dict(SMALL, boundary={"kind": "polynomial", "coeffs": [1.0, 0.0, -0.1]}, seed=1),
        dict(SMALL, boundary={"kind": "polynomial", "coeffs": [-1.0, 0.0, 0.1]}, seed=1),
        dict(SMALL, boundary=QUAD, seed=-3),
        dict(SMALL, boundary=QUAD, seed=1, grid={"n_t": 5}),
        dict(SMALL, boundary=QUAD, seed=1, grid={"dx": 5}),
    ],
)
def test_configuration_errors_exit_2(tmp_path, config):
    command = "pde" if "grid" in config else "density"
    code, _ = run(tmp_path, command, config)
    assert code == cli.EXIT_CONFIG


def test_bad_json_exit_2(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    assert cli.main(["density", "--config", str(path)]) == cli.EXIT_CONFIG
    assert cli.main(["density", "--config", str(tmp_path / "missing.json")]) == cli.EXIT_CONFIG


def test_numerical_error_exit_3(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise NumericalError("diverged")

    monkeypatch.setattr(cli, "solve_cauchy", boom)
    code, _ = run(tmp_path, "pde", dict(SMALL, boundary=QUAD, seed=1))
    assert code == cli.EXIT_NUMERICAL


def test_workers_flag_validated(tmp_path):
    code, _ = run(tmp_path, "cdf", dict(SMALL, boundary=QUAD, seed=1), "--workers", "0")
    assert code == cli.EXIT_CONFIG
