import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from dirac_hartree.cli import main

SMALL_INI = """\
[truncation]
m = 2
n = 4
n_d = 8
n_r = 64
n_theta = 16

[verify]
samples = 5
gradient_states = 2
hartree_states = 2
count = 2
eigen_points = 120
"""


@pytest.fixture
def small_ini(tmp_path):
    p = tmp_path / "small.ini"
    p.write_text(SMALL_INI)
    return str(p)


def run(*argv):
    return main([str(a) for a in argv])


def read_csv(path):
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.reader(rows)
    head = next(reader)
    return head, np.array([[float(v) for v in row] for row in reader])


def test_spectrum_default(tmp_path, capsys):
    assert run("spectrum", "--out", tmp_path) == 0
    out = capsys.readouterr().out
    doc = json.loads((tmp_path / "spectrum.json").read_text())
    ev = [m["eigenvalue"] for m in doc["payload"]["modes"]]
    assert len(ev) == 408
    assert ev[0] == pytest.approx(1.434695650819563, rel=1e-14)
    assert ev[1] == pytest.approx(-1.434695650819563, rel=1e-14)
    assert doc["payload"]["gap"]["bound"] == pytest.approx(2.0)
    assert "PASS" in out and "gap_bound" in out
    assert doc["header"]["config_hash"] and doc["header"]["seed"] == 0 and doc["header"]["version"]


def test_spectrum_single_channel(tmp_path, capsys):
    assert run("spectrum", "--m-max", 0, "--n-max", 1, "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "spectrum.json").read_text())
    assert len(doc["payload"]["modes"]) == 2
    lines = [ln for ln in capsys.readouterr().out.splitlines() if ln.strip()[:1].isdigit()]
    assert len(lines) == 2
    assert all(float(ln.split()[-1]) == pytest.approx(2.0) for ln in lines)


def test_spectrum_gap_bound_tracks_radius(tmp_path):
    ini = tmp_path / "r.ini"
    ini.write_text("[domain]\nradius = 0.5\n[truncation]\nm = 1\nn = 2\n")
    assert run("spectrum", "--config", ini, "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "spectrum.json").read_text())
    assert doc["payload"]["gap"]["bound"] == pytest.approx(2 / 0.25)


def test_solve_and_rerun_identical(tmp_path, small_ini, capsys):
    assert run("solve", "--config", small_ini, "--branch", 1, "--out", tmp_path / "a") == 0
    assert run("solve", "--config", small_ini, "--branch", 1, "--out", tmp_path / "b") == 0
    a = (tmp_path / "a" / "solution_k1.json").read_bytes()
    assert a == (tmp_path / "b" / "solution_k1.json").read_bytes()
    doc = json.loads(a)
    p = doc["payload"]
    assert p["converged"] and p["branch"] == 1 and p["action"] > 0
    assert len(p["coefficients"]) == len(p["mode_order"]) == 2 * 5 * 4
    assert doc["header"]["kind"] == "solution"


def test_solve_branch_below_omega(tmp_path, small_ini, capsys):
    assert run("solve", "--config", small_ini, "--branch", 2, "--out", tmp_path) == 3
    assert "unavailable" in capsys.readouterr().err


def test_omega_on_spectrum(tmp_path, small_ini):
    assert run("solve", "--config", small_ini, "--omega", 1.434695650819563, "--out", tmp_path) == 3


def test_non_convergence_exit_code(tmp_path, small_ini, monkeypatch):
    monkeypatch.setenv("DIRAC_HARTREE_SOLVER_MAX_ITER", "1")
    assert run("solve", "--config", small_ini, "--out", tmp_path) == 4


def test_config_errors(tmp_path, small_ini, monkeypatch, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[truncation]\nsurprise = 1\n")
    assert run("spectrum", "--config", bad, "--out", tmp_path) == 2
    assert run("spectrum", "--config", tmp_path / "missing.ini") == 2
    monkeypatch.setenv("DIRAC_HARTREE_RUN_NOPE", "1")
    assert run("spectrum", "--config", small_ini, "--out", tmp_path) == 2


def test_usage_errors():
    with pytest.raises(SystemExit) as info:
        run("ladder", "--count", 0)
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        run("frobnicate")
    assert info.value.code == 2


def test_ladder_and_export(tmp_path, small_ini, capsys):
    assert run("ladder", "--config", small_ini, "--count", 3, "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert out.count("converged") == 3
    doc = json.loads((tmp_path / "ladder.json").read_text())
    rows = doc["payload"]["branches"]
    assert [r["converged"] for r in rows] == [True] * 3
    assert all(r["action"] > 0 for r in rows)

    sol = tmp_path / "solution_k1.json"
    assert run("export", sol, "--what", "density", "potential", "spinor", "--out", tmp_path) == 0
    head, data = read_csv(tmp_path / "solution_k1_density_potential_spinor.csv")
    assert head == ["r", "theta", "density", "potential", "psi1_re", "psi1_im", "psi2_re", "psi2_im"]
    assert data.shape == (64 * 16, 8)
    assert np.all(data[:, 2] >= 0)
    assert data[:, 3].min() >= -1e-6 * data[:, 3].max()
    # row-major over (radial node, angular node)
    assert np.all(data[:16, 0] == data[0, 0]) and data[16, 0] > data[0, 0]
    rho = data[:, 4] ** 2 + data[:, 5] ** 2 + data[:, 6] ** 2 + data[:, 7] ** 2
    np.testing.assert_allclose(rho, data[:, 2], rtol=1e-12, atol=1e-300)


def test_export_zero_state(tmp_path, small_ini):
    assert run("solve", "--config", small_ini, "--out", tmp_path) == 0
    sol = tmp_path / "solution_k1.json"
    doc = json.loads(sol.read_text())
    doc["payload"]["coefficients"] = [[0.0, 0.0]] * len(doc["payload"]["coefficients"])
    zero = tmp_path / "zero.json"
    zero.write_text(json.dumps(doc))
    assert run("export", zero, "--what", "density", "potential", "--out", tmp_path) == 0
    _, data = read_csv(tmp_path / "zero_density_potential.csv")
    assert np.all(data[:, 2:] == 0)


def test_export_bad_file(tmp_path):
    p = tmp_path / "junk.json"
    p.write_text("{}")
    assert run("export", p, "--out", tmp_path) == 2


def test_verify_pass_and_fault(tmp_path, small_ini, capsys):
    assert run("verify", "--config", small_ini, "--out", tmp_path / "a") == 0
    doc = json.loads((tmp_path / "a" / "verify.json").read_text())
    assert doc["payload"]["pass"] is True and set(doc) == {"header", "payload", "timing"}
    assert "overall: PASS" in capsys.readouterr().out
    assert run("verify", "--config", small_ini, "--out", tmp_path / "b",
               "--inject-fault", "positivity") == 1
    doc = json.loads((tmp_path / "b" / "verify.json").read_text())
    failed = [c["name"] for c in doc["payload"]["checks"] if not c["pass"]]
    assert failed == ["positivity"]


def test_console_script_version():
    out = subprocess.run([sys.executable, "-m", "dirac_hartree.cli", "--version"],
                         capture_output=True, text=True, check=True)
    assert "0.1.0" in out.stdout
