import csv
import json
import subprocess
import sys

import pytest

import gqp_lab.cli as cli
import gqp_lab.spectral as Sp
import gqp_lab.topology as Tp
from gqp_lab.config import RunConfig
from gqp_lab.report import read_report


def run(argv, out):
    return cli.main(list(argv) + ["--out", str(out)])


def report(out):
    return read_report(out / "report.json")


def test_analyze_sphere(tmp_path):
    assert run(["analyze", "--surface", "sphere", "--grid", "64x64"], tmp_path) == 0
    rep = report(tmp_path)
    assert rep["command"] == "analyze"
    assert rep["topology"]["signed_degree"] == 1
    assert rep["truncation_T"] is None
    assert rep["status"] == {"exit_code": 0, "message": "ok"}
    assert rep["outputs"] == ["report.json"]
    assert "workers" not in rep["config"]


def test_analyze_catenoid_comparisons(tmp_path, capsys):
    assert run(["analyze", "--surface", "catenoid", "--grid", "128x256", "--T", "12"], tmp_path) == 0
    rep = report(tmp_path)
    comp = {c["quantity"]: c for c in rep["paper_comparison"]}
    assert comp["abs_signed_degree"]["status"] == "agree"
    assert comp["N_dacosta"]["paper_value"] == 4
    assert rep["truncation_T"] == 12.0
    text = capsys.readouterr().out
    assert "signed_degree: -1" in text
    assert "status: 0 ok" in text


def test_emit_csv_and_plot_data(tmp_path):
    argv = ["analyze", "--surface", "torus", "--grid", "300x40", "--emit", "csv,plot-data"]
    assert run(argv, tmp_path) == 0
    rep = report(tmp_path)
    assert rep["outputs"] == ["fields.csv", "fields.dat", "report.json"]
    rows = list(csv.reader((tmp_path / "fields.csv").open()))
    assert rows[0] == list(cli.CSV_COLUMNS)
    # strided to at most 128 nodes per direction
    assert 1 < len(rows) - 1 <= 128 * 40
    blocks = (tmp_path / "fields.dat").read_text().strip().split("\n\n")
    assert len(blocks) <= 128


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(RunConfig(surface="torus", R=2.5, r=1.0, grid=(64, 64)).to_toml())
    out = tmp_path / "o"
    assert run(["analyze", "--config", str(cfg), "--R", "3.0"], out) == 0
    echo = report(out)["config"]
    assert echo["R"] == 3.0 and echo["r"] == 1.0 and echo["grid"] == "64x64"
    # switching surface drops the old surface's parameters
    out2 = tmp_path / "o2"
    assert run(["analyze", "--config", str(cfg), "--surface", "sphere"], out2) == 0
    assert "R" not in report(out2)["config"]


def test_report_config_reproduces_run(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["analyze", "--surface", "bilayer-neck", "--grid", "64x128", "--T", "8"], a) == 0
    echo = report(a)["config"]
    echo["out"] = str(b)
    (tmp_path / "echo.toml").write_text(RunConfig.from_dict(echo).to_toml())
    assert cli.main(["analyze", "--config", str(tmp_path / "echo.toml")]) == 0
    ra, rb = report(a), report(b)
    assert ra["topology"] == rb["topology"]


@pytest.mark.parametrize("argv", [
    ["analyze", "--bogus"],
    ["analyze", "--surface", "torus", "--R", "1.0", "--r", "2.0"],
    ["analyze", "--surface", "sphere", "--grid", "10x10"],
    ["analyze", "--surf", "sphere"],
    ["frobnicate"],
    ["sweep", "--surface", "torus", "--grid", "32x32"],
    ["sweep", "--surface", "torus", "--param", "R", "--range", "x"],
    ["spectrum", "--surface", "catenoid", "--N", "32"],
])
def test_bad_input_exits_1(argv, tmp_path, capsys):
    assert run(argv, tmp_path) == 1
    assert "error" in capsys.readouterr().err


def test_bad_toml_exits_1(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("surface = 'sphere'\nunknown_key = 1\n")
    assert run(["analyze", "--config", str(cfg)], tmp_path) == 1


def test_indeterminate_degree_exits_2(tmp_path):
    assert run(["analyze", "--surface", "catenoid", "--T", "0.3", "--grid", "64x64"], tmp_path) == 2


def test_unconverged_spectrum_exits_2(tmp_path):
    argv = ["spectrum", "--surface", "catenoid", "--T", "3", "--N", "256", "--lmax", "2"]
    assert run(argv, tmp_path) == 2
    rep = report(tmp_path)
    assert rep["status"]["exit_code"] == 2
    assert rep["spectrum"]["bound_count"] is None


def test_invariant_violation_exits_3(tmp_path, monkeypatch):
    fn, flag = Tp.FIELDS["degree_density"]
    monkeypatch.setitem(Tp.FIELDS, "degree_density", (lambda g: 1.01 * fn(g), flag))
    assert run(["analyze", "--surface", "sphere", "--grid", "32x32"], tmp_path) == 3


def test_failed_spectral_check_exits_3(tmp_path, monkeypatch):
    real = cli.liouville_check

    def broken(*a, **k):
        rec = real(*a, **k)
        rec["ok"] = False
        return rec

    monkeypatch.setattr(cli, "liouville_check", broken)
    argv = ["spectrum", "--surface", "sphere", "--N", "256", "--lmax", "2", "--potential", "none"]
    assert run(argv, tmp_path) == 3
    rep = report(tmp_path)
    assert rep["status"]["exit_code"] == 3
    assert not {c["name"]: c for c in rep["checks"]}["liouville_vs_weighted"]["ok"]


def test_spectrum_sphere_outputs(tmp_path):
    argv = ["spectrum", "--surface", "sphere", "--N", "512", "--lmax", "3", "--potential", "none",
            "--emit", "csv,plot-data"]
    assert run(argv, tmp_path) == 0
    rep = report(tmp_path)
    checks = {c["name"]: c for c in rep["checks"]}
    assert checks["closed_form_spectrum"]["ok"]
    assert rep["outputs"] == ["report.json", "spectrum.dat", "spectrum_l0.csv", "spectrum_l1.csv",
                              "spectrum_l2.csv", "spectrum_l3.csv"]
    rows = list(csv.DictReader((tmp_path / "spectrum_l1.csv").open()))
    assert float(rows[0]["energy"]) == pytest.approx(2.0, rel=1e-4)


def test_spectrum_catenoid_report(tmp_path):
    argv = ["spectrum", "--surface", "catenoid", "--N", "512", "--T", "12", "--lmax", "3"]
    assert run(argv, tmp_path) == 0
    rep = report(tmp_path)
    spectrum = rep["spectrum"]
    assert spectrum["bound_count"] == 1 and spectrum["ground_energy"] < 0
    checks = {c["name"]: c for c in rep["checks"]}
    assert checks["variational_upper_bound"]["ok"]
    assert checks["variational_upper_bound"]["detail"]["certifies_negative_ground"]
    comp = rep["paper_comparison"][0]
    assert comp["quantity"] == "bound_count" and comp["paper_value"] == 4
    assert comp["status"] == "disagree"


def test_sweep_with_rejected_rows(tmp_path):
    argv = ["sweep", "--surface", "torus", "--r", "1.0", "--param", "R", "--range", "0.5,3.0",
            "--steps", "6", "--grid", "64x64"]
    assert run(argv, tmp_path) == 0
    rep = report(tmp_path)
    sweep = rep["sweep"]
    assert sweep["rejected_rows"] == [0, 1]
    assert sweep["degrees_constant"] and sweep["absolute_degrees"] == [2]
    rows = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    assert [r["status"] for r in rows] == ["rejected"] * 2 + ["ok"] * 4
    assert rows[0]["message"]


def test_sweep_refines_torus_minimum(tmp_path):
    argv = ["sweep", "--surface", "torus", "--r", "1.0", "--param", "R", "--range", "1.1,2.0",
            "--steps", "10", "--grid", "256x256"]
    assert run(argv, tmp_path) == 0
    minimum = report(tmp_path)["sweep"]["minimum"]
    assert minimum["refined_argmin"] == pytest.approx(2 ** 0.5, abs=0.02)


def test_sweep_degree_change_exits_3(tmp_path, monkeypatch):
    real = cli._sweep_row

    def flipped(cfg, index, value):
        row = real(cfg, index, value)
        if index == 1:
            row["signed_degree"] = 5
        return row

    monkeypatch.setattr(cli, "_sweep_row", flipped)
    argv = ["sweep", "--surface", "sphere", "--param", "a", "--range", "1,2", "--steps", "3",
            "--grid", "32x32"]
    assert run(argv, tmp_path) == 3
    assert report(tmp_path)["status"]["exit_code"] == 3


def _snapshot(out):
    return {p.name: p.read_bytes() for p in out.iterdir()}


@pytest.mark.parametrize("argv", [
    ["analyze", "--surface", "catenoid", "--grid", "128x128", "--T", "10"],
    ["spectrum", "--surface", "torus", "--N", "256", "--lmax", "3"],
    ["sweep", "--surface", "torus", "--param", "R", "--range", "2,3", "--steps", "4", "--grid", "64x64"],
])
def test_worker_count_does_not_change_output(argv, tmp_path):
    out = tmp_path / "run"
    assert run(argv + ["--workers", "1", "--emit", "csv"], out) == 0
    first = _snapshot(out)
    assert run(argv + ["--workers", "8", "--emit", "csv"], out) == 0
    second = _snapshot(out)
    assert sorted(first) == sorted(second)
    for name in first:
        if name != "report.json":
            assert first[name] == second[name], name
    a = first["report.json"].decode().splitlines()
    b = second["report.json"].decode().splitlines()
    assert len(a) == len(b)
    assert all('"generated_at"' in x for x, y in zip(a, b) if x != y)


def test_surfaces_listing(capsys):
    assert cli.main(["surfaces"]) == 0
    listing = json.loads(capsys.readouterr().out)
    assert set(listing) == {"plane", "sphere", "catenoid", "torus", "bilayer-neck"}
    assert listing["torus"]["euler_characteristic"] == 0
    assert listing["catenoid"]["compact"] is False


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "gqp_lab.cli", "analyze", "--surface", "sphere",
                           "--grid", "32x32", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "report:" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "gqp_lab.cli", "--version"], capture_output=True, text=True)
    assert proc.stdout.startswith("gqp-lab ")
