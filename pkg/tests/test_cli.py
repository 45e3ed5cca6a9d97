import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

import oracle
from tqrm.cli import main, parse_angular, parse_scan


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def test_parsers():
    assert parse_angular("2pi*1e3") == pytest.approx(2 * math.pi * 1e3)
    assert parse_angular("-2pi*2") == pytest.approx(-4 * math.pi)
    np.testing.assert_allclose(parse_scan("0:1:0.25"), [0, 0.25, 0.5, 0.75, 1.0])
    assert parse_scan("0:3.5:0.05").size == 71


def test_verify_appendix(tmp_path, capsys):
    assert run(tmp_path, "verify", "appendix", "--g", "1") == 0
    out = capsys.readouterr().out
    residual = float(out.split()[2])
    assert residual <= 1e-14
    assert (tmp_path / "verify_appendix.json").exists()


@pytest.mark.parametrize("what", ["reduction", "symmetry"])
def test_verify_other_checks(tmp_path, what):
    assert run(tmp_path, "verify", what, "--Omega", "0.4", "--eps", "0.2", "--g", "0.5", "--nmax", "20") == 0


def test_roots_table(tmp_path):
    assert run(tmp_path, "roots", "--omega", "1", "--Omega", "0.4", "--eps", "0.2", "--g", "0.5",
               "--emin", "-1", "--emax", "3") == 0
    header, table = read_csv(tmp_path / "roots.csv")
    assert header[0] == "E_root [omega]"
    levels = oracle.triplet_levels(1, 0.4, 0.2, 0.5, 240)
    assert table.shape[0] >= 6
    for E in table[:, 0]:
        assert np.min(np.abs(levels - E)) < 1e-6
    assert np.all(table[:, 2] < 1e-6)


def test_sidecar_documents_every_column(tmp_path):
    assert run(tmp_path, "spectrum", "--Omega", "0.4", "--eps", "0.2", "--gscan", "0:1:0.5", "--k", "3", "--nmax", "20") == 0
    header, _ = read_csv(tmp_path / "spectrum.csv")
    meta = json.loads((tmp_path / "spectrum.json").read_text())
    assert [c["name"] for c in meta["columns"]] == [h.split(" [")[0] for h in header]
    for key in ("library_version", "wall_time_s", "config", "truncation"):
        assert key in meta


def test_output_identical_across_threads(tmp_path, monkeypatch):
    args = ["ground", "--Omega", "1", "--gscan", "0:1.5:0.25", "--observable", "all", "--nmax", "30"]
    one, many = tmp_path / "one", tmp_path / "many"
    assert main([*args, "--out", str(one), "--threads", "1"]) == 0
    monkeypatch.setenv("TQRM_THREADS", "3")
    assert main([*args, "--out", str(many), "--threads", "1"]) == 0
    assert (one / "ground.csv").read_bytes() == (many / "ground.csv").read_bytes()
    assert json.loads((many / "ground.json").read_text())["threads"] == 3


def test_ground_scan_matches_exact_diagonalisation(tmp_path):
    assert run(tmp_path, "ground", "--Omega", "1", "--eps", "0", "--gscan", "0:1:0.5", "--observable", "nb", "--nmax", "40") == 0
    _, table = read_csv(tmp_path / "ground.csv")
    for g, nb, n_used in table:
        _, psi = oracle.ground_state(1, 1, 0, g, int(n_used))
        rho = oracle.phonon_density(psi, int(n_used))
        assert nb == pytest.approx(float(np.dot(np.diag(rho), np.arange(rho.shape[0]))), abs=1e-8)


def test_full_precision_round_trip(tmp_path):
    assert run(tmp_path, "meanfield", "--Omega", "1", "--g", "2") == 0
    _, table = read_csv(tmp_path / "meanfield.csv")
    assert abs(table[0, 2] + 4.25) < 1e-14
    assert table[0, 1] == pytest.approx(math.sqrt(3.75), abs=1e-12)


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# spectrum settings\nOmega = 0.4\ng = 0.5\nk = 2\nnmax = 20\n")
    assert run(tmp_path, "spectrum", "--config", str(cfg), "--g", "0.25") == 0
    _, table = read_csv(tmp_path / "spectrum.csv")
    assert table.shape == (1, 3)
    assert table[0, 0] == 0.25
    ref = oracle.levels(1, 0.4, 0, 0.25, 20)[:2]
    np.testing.assert_allclose(table[0, 1:], ref, atol=1e-10)


def test_si_units(tmp_path):
    assert run(tmp_path, "spectrum", "--Omega", "0.4", "--k", "1", "--nmax", "10", "--si", "--nu", "2pi*1e6") == 0
    header, table = read_csv(tmp_path / "spectrum.csv")
    assert header[1] == "E1 [rad/s]"
    assert table[0, 1] == pytest.approx(-0.8 * math.sqrt(3) * 2 * math.pi * 1e6)


def test_plot_written(tmp_path):
    assert run(tmp_path, "density", "--Omega", "1", "--g", "0.5", "--nx", "41", "--plot") == 0
    svg = (tmp_path / "density.svg").read_text()
    assert svg.startswith("<svg") and "polyline" in svg


def test_physical_prints_normalised_params(tmp_path, capsys):
    assert run(tmp_path, "physical") == 0
    lines = capsys.readouterr().out.strip().splitlines()
    payload = json.loads(lines[-1])
    assert payload["model_params"]["omega"] == 1.0
    _, table = read_csv(tmp_path / "physical.csv")
    assert 0.94 <= table[0, -1] <= 1.14


def test_config_errors_exit_2(tmp_path, capsys):
    assert run(tmp_path, "spectrum", "--Omega", "abc") == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense = 1\n")
    assert run(tmp_path, "spectrum", "--config", str(bad)) == 2
    assert run(tmp_path, "ground", "--gscan", "1:0:0.1") == 2
    assert run(tmp_path, "spectrum", "--omega", "-1") == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert all("error" in json.loads(line) for line in err)


def test_numerical_errors_exit_3(tmp_path, capsys):
    assert run(tmp_path, "gfun", "--Omega", "0.4", "--g", "0.5") == 3
    payload = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert payload["error"] == "ResonantCase"


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "tqrm.cli", "verify", "appendix", "--g", "1", "--out", str(tmp_path)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert "appendix residual" in proc.stdout
