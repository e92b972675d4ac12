import csv
import io
import subprocess
import sys

import pytest

from spdelab.cli import main


def test_constants(capsys):
    assert main(["constants", "--N", "4096"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    by_kind = {r["kind"]: float(r["value"]) for r in rows}
    assert by_kind["continuum_two_point"] == 0.25
    assert by_kind["general_stencil"] == -0.125
    assert by_kind["fd_discrete"] == pytest.approx(0.25, abs=1e-12)
    assert 0.1929 <= by_kind["galerkin_discrete"] <= 0.1939


def test_models(capsys):
    assert main(["models"]) == 0
    out = capsys.readouterr().out
    for name in ("burgers_fd", "gradient_sin2", "strange_spde", "inviscid_regime"):
        assert name in out


def test_run_writes_outputs(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("experiment_id = scheme_comparison\nseed = 1\nseeds = [0]\ngrid.N = 16\n"
                   "T = 0.01\nstepper.dt = 0.001\n")
    out = tmp_path / "out"
    assert main(["run", "scheme_comparison", "--config", str(cfg), "--out", str(out),
                 "--set", "model.sigma=0.5", "--seed", "4"]) == 0
    assert (out / "manifest.json").exists()
    assert "manifest.json" in capsys.readouterr().out
    text = (out / "manifest.json").read_text()
    assert '"model.sigma": 0.5' in text and '"master_seed": 4' in text


def test_invalid_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("seed = 0\nstencil.a = -1\n")
    assert main(["run", "scheme_comparison", "--config", str(cfg)]) == 2
    assert "stencil.a: invariant a >= 0 violated (a = -1)" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path, capsys):
    assert main(["run", "gamma_sweep", "--config", str(tmp_path / "none.cfg")]) == 2
    assert "spdelab:" in capsys.readouterr().err


def test_help_lists_schemas_and_keys():
    out = subprocess.run([sys.executable, "-m", "spdelab", "run", "--help"],
                         capture_output=True, text=True, check=True).stdout
    assert "gamma_argmin.csv" in out and "stepper.cfl_policy" in out
