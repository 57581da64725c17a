# tests/test_cli.py
# 명령행: 종료 코드, 오류 레코드, 산출물, 재현성

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from cli import EXIT_CONFIG, EXIT_OK, EXIT_PRECONDITION, load_config, main


def _run(*args):
    return CliRunner().invoke(main, list(args))


def _error_record(result) -> dict:
    return json.loads(result.output.strip().splitlines()[-1])


def test_bifurcate_writes_report(write_config, tmp_path):
    out = tmp_path / "bif"
    result = _run("bifurcate", "--config", write_config(), "--out", str(out))
    assert result.exit_code == EXIT_OK, result.output
    for name in ("summary.csv", "report.txt", "fields/symmetric_multiplicity.csv"):
        assert (out / name).is_file()
    table = pd.read_csv(out / "summary.csv")
    assert len(table) >= 2
    assert table["all_passed"].any()


def test_bifurcate_is_reproducible(write_config, tmp_path):
    path = write_config()
    first, second = tmp_path / "a", tmp_path / "b"
    assert _run("bifurcate", "--config", path, "--out", str(first)).exit_code == EXIT_OK
    assert _run("bifurcate", "--config", path, "--out", str(second)).exit_code == EXIT_OK
    for csv in sorted(first.rglob("*.csv")):
        twin = second / csv.relative_to(first)
        assert csv.read_bytes() == twin.read_bytes()


def test_malformed_json_is_config_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    out = tmp_path / "never"
    result = _run("bifurcate", "--config", str(path), "--out", str(out))
    assert result.exit_code == EXIT_CONFIG
    assert _error_record(result)["error"] == "config_error"
    assert not out.exists()


def test_missing_sigma_is_config_error(write_config, tmp_path):
    path = write_config(params={"g": 1.0, "d": 1.0, "alpha": 0.5})
    out = tmp_path / "never"
    result = _run("dispersion", "--config", path, "--out", str(out))
    assert result.exit_code == EXIT_CONFIG
    record = _error_record(result)
    assert record["details"]["key"] == "params.sigma"
    assert not out.exists()


def test_resonant_lattice_is_precondition_error(write_config, tmp_path):
    path = write_config(params={"g": 1.0, "d": 1.0, "sigma": 1.0, "alpha": float(np.pi)})
    out = tmp_path / "never"
    result = _run("kernel", "--config", path, "--out", str(out))
    assert result.exit_code == EXIT_PRECONDITION
    assert _error_record(result)["error"] in {"resonance", "no_positive_nu"}
    assert not out.exists()


def test_truncation_option_is_validated(write_config, tmp_path):
    result = _run("kernel", "--config", write_config(), "--out", str(tmp_path / "x"),
                  "--truncation", "0")
    assert result.exit_code == 2


def test_load_config_overrides(write_config):
    cfg = load_config(write_config(), truncation=6, tol=1e-6, lang="en")
    assert cfg["discretization"]["N"] == 6
    assert cfg["tol"] == 1e-6
    assert cfg["lang"] == "en"
    # 기본값 병합
    assert cfg["solve"]["field_points"] == 16


def test_dispersion_outputs(write_config, tmp_path):
    out = tmp_path / "disp"
    result = _run("dispersion", "--config", write_config(), "--out", str(out), "--lang", "en")
    assert result.exit_code == EXIT_OK, result.output
    for name in ("kappa.csv", "summary.csv", "resonance.csv",
                 "fields/curve_k1.csv", "fields/curve_k2.csv", "fields/rho_modes.csv"):
        assert (out / name).is_file(), name
    assert pd.read_csv(out / "resonance.csv").empty


def test_kernel_outputs(write_config, tmp_path):
    out = tmp_path / "kernel"
    result = _run("kernel", "--config", write_config(), "--out", str(out))
    assert result.exit_code == EXIT_OK, result.output
    table = pd.read_csv(out / "summary.csv")
    assert len(table) == 2
    assert (out / "fields" / "mode_1_0.csv").is_file()


def test_solve_trivial_amplitude(write_config, tmp_path):
    path = write_config(solve={"t_grid": [[0.0, 0.0]], "field_points": 4})
    out = tmp_path / "solve"
    result = _run("solve", "--config", path, "--out", str(out))
    assert result.exit_code == EXIT_OK, result.output
    table = pd.read_csv(out / "summary.csv")
    assert table["residual_max"].iloc[0] < 1e-14
    assert table["c1"].iloc[0] == pytest.approx(3.17265, abs=2e-4)
    assert len(pd.read_csv(out / "fields" / "surface_0.csv")) == 16

    N, M = 4, 20
    coeffs = pd.read_csv(out / "fields" / "velocity_0_coeffs.csv", float_precision="round_trip")
    assert list(coeffs.columns) == ["n1", "n2", "z_index", "component", "re", "im"]
    assert len(coeffs) == (2 * N + 1) ** 2 * (M + 1) * 3
    values = pd.read_csv(out / "fields" / "velocity_0.csv", float_precision="round_trip")
    assert list(values.columns) == ["x", "y", "z", "u1", "u2", "u3"]
    assert len(values) == (2 * N + 1) ** 2 * (M + 1)
    # t = 0: 층류 U[c*]
    c1, c2 = table["c1"].iloc[0], table["c2"].iloc[0]
    z = values["z"].to_numpy()
    np.testing.assert_allclose(values["u1"], c1 * np.cos(0.5 * z) + c2 * np.sin(0.5 * z), atol=1e-12)
    np.testing.assert_allclose(values["u3"], 0.0, atol=1e-12)


def test_check_small_surface(write_config, tmp_path):
    path = write_config(check={"eta": [[1, 0, 1e-3], [0, 1, 1e-3]], "c": [3.1727, -0.3871]})
    out = tmp_path / "check"
    result = _run("check", "--config", path, "--out", str(out))
    assert result.exit_code == EXIT_OK, result.output
    table = pd.read_csv(out / "summary.csv")
    assert table["surface_kinematic"].iloc[0] < 1e-9
    values = pd.read_csv(out / "fields" / "velocity.csv")
    assert len(values) == 9 ** 2 * 21
    assert (out / "fields" / "velocity_coeffs.csv").is_file()


def test_lift_outputs(write_config, tmp_path):
    path = write_config(lift={"mode": [0, 1], "amplitude": 1e-2, "beta": 0.1})
    out = tmp_path / "lift"
    result = _run("lift", "--config", path, "--out", str(out))
    assert result.exit_code == EXIT_OK, result.output
    table = pd.read_csv(out / "summary.csv")
    assert table["beltrami"].iloc[0] < 1e-8
    assert Path(out / "fields" / "stream.csv").is_file()
    coeffs = pd.read_csv(out / "fields" / "velocity_coeffs.csv")
    assert len(coeffs) == 9 ** 2 * 21 * 3
