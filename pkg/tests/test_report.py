# tests/test_report.py
# RunWriter 산출물과 보고서 문구

import numpy as np
import pandas as pd
import pytest

from core import Field3D, LaminarFlow, SurfaceProfile
from i18n import get_lang, set_lang, t
from modules.report import RunWriter, field_coeffs_frame, field_values_frame, write_csv


def test_writer_defers_all_output(tmp_path):
    out = tmp_path / "run"
    writer = RunWriter(out, "solve", meta="N=4")
    writer.add_table("summary", pd.DataFrame({"t1": [0.0, 1e-2], "residual": [0.0, 3e-12]}))
    writer.add_field("eta_0", pd.DataFrame({"n1": [0], "n2": [1], "eta": [5e-3]}))
    writer.add_lines(["첫 줄"])
    assert not out.exists()

    written = writer.finalize()
    names = {p.relative_to(out).as_posix() for p in written}
    assert {"summary.csv", "fields/eta_0.csv", "report.txt"} <= names
    assert (out / "report.txt").read_text(encoding="utf-8") == "첫 줄\n"


def test_workbook_has_one_sheet_per_table(tmp_path):
    openpyxl = pytest.importorskip("openpyxl")
    writer = RunWriter(tmp_path, "dispersion")
    writer.add_table("kappa", pd.DataFrame({"k": [0.0, 1.0], "kappa": [1.0, 1.2]}))
    writer.add_table("resonance", pd.DataFrame(columns=["n1", "n2"]))
    writer.finalize()
    wb = openpyxl.load_workbook(tmp_path / "report.xlsx")
    assert wb.sheetnames == ["kappa", "resonance"]
    assert wb["kappa"]["A4"].value == "k"
    assert wb["kappa"]["B6"].value == pytest.approx(1.2)


def test_csv_roundtrip_precision(tmp_path):
    value = float(np.pi) / 7.0
    path = write_csv(pd.DataFrame({"x": [value]}), tmp_path / "x.csv")
    assert pd.read_csv(path, float_precision="round_trip")["x"].iloc[0] == value


def test_translations():
    previous = get_lang()
    try:
        set_lang("en")
        assert t("files_written", 3) == "Files written: 3"
        set_lang("ko")
        assert t("files_written", 3) == "출력 파일: 3"
        set_lang("fr")
        assert get_lang() == "ko"
    finally:
        set_lang(previous)


def test_coefficient_dump_rebuilds_field(small_setup, rng):
    shape = (3, small_setup.M + 1, small_setup.size, small_setup.size)
    field = Field3D(rng.standard_normal(shape) + 1j * rng.standard_normal(shape), small_setup)
    frame = field_coeffs_frame(field)
    assert list(frame.columns) == ["n1", "n2", "z_index", "component", "re", "im"]
    assert len(frame) == 3 * (small_setup.M + 1) * small_setup.size ** 2

    rebuilt = np.zeros(shape, dtype=complex)
    rows = frame.to_numpy()
    comp = rows[:, 3].astype(int) - 1
    zi = rows[:, 2].astype(int)
    i = rows[:, 0].astype(int) + small_setup.N
    j = rows[:, 1].astype(int) + small_setup.N
    rebuilt[comp, zi, i, j] = rows[:, 4] + 1j * rows[:, 5]
    assert np.array_equal(rebuilt, field.coeffs)


def test_value_dump_of_laminar_flow_on_flat_surface(small_setup):
    alpha = small_setup.params.alpha
    field = Field3D.from_laminar(small_setup, LaminarFlow(1.0, 0.5))
    frame = field_values_frame(field, SurfaceProfile.zeros(small_setup))
    assert list(frame.columns) == ["x", "y", "z", "u1", "u2", "u3"]
    assert len(frame) == (small_setup.M + 1) * small_setup.size ** 2
    z = frame["z"].to_numpy()
    np.testing.assert_allclose(frame["u1"], np.cos(alpha * z) + 0.5 * np.sin(alpha * z), atol=1e-12)
    np.testing.assert_allclose(frame["u2"], -np.sin(alpha * z) + 0.5 * np.cos(alpha * z), atol=1e-12)
    np.testing.assert_allclose(frame["u3"], 0.0, atol=1e-12)


def test_value_dump_top_layer_follows_surface(small_setup):
    eta = SurfaceProfile.from_modes(small_setup, {(1, 0): 1e-2, (0, 1): 5e-3})
    frame = field_values_frame(Field3D.zeros(small_setup), eta)
    top = frame.iloc[: small_setup.size ** 2]
    expected = [eta.evaluate(x, y) for x, y in zip(top["x"], top["y"])]
    np.testing.assert_allclose(top["z"], expected, atol=1e-12)
    bottom = frame.iloc[-small_setup.size ** 2:]
    np.testing.assert_allclose(bottom["z"], -small_setup.params.d, atol=1e-12)


def test_writer_velocity_adds_both_dumps(small_setup, tmp_path):
    writer = RunWriter(tmp_path, "check")
    writer.add_velocity("velocity", Field3D.zeros(small_setup), SurfaceProfile.zeros(small_setup))
    names = {p.relative_to(tmp_path).as_posix() for p in writer.finalize()}
    assert {"fields/velocity.csv", "fields/velocity_coeffs.csv"} <= names
