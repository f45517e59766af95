import json
import subprocess
import sys

import pytest

from seli_mfg.cli import EXIT_CONFIG, EXIT_CRITERIA, EXIT_NOT_CONVERGED, EXIT_OK, main
from seli_mfg.config import dump_config
from seli_mfg.model import reference_scenario


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "scenario.json"
    dump_config(reference_scenario(n_steps=200).replace(output_dir=str(tmp_path / "out")), path)
    return path


def test_solve_writes_outputs(scenario, tmp_path, capsys):
    assert main(["solve", str(scenario)]) == EXIT_OK
    out = tmp_path / "out"
    for name in ("mean_field.csv", "aggregates.csv", "qoi.csv", "summary.csv", "plots.gp", "manifest.json"):
        assert (out / name).exists()
    assert "converged" in capsys.readouterr().out
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["converged"] is True


def test_baseline_command(scenario, tmp_path, capsys):
    assert main(["baseline", str(scenario), "--out", str(tmp_path / "b")]) == EXIT_OK
    assert (tmp_path / "b" / "mean_field_baseline.csv").exists()
    assert "theta(T)" in capsys.readouterr().out


def test_simulate_command(scenario, tmp_path, capsys):
    assert main(["simulate", str(scenario), "--n", "100", "--replicas", "2", "--seed", "3",
                 "--out", str(tmp_path / "s")]) == EXIT_OK
    lines = (tmp_path / "s" / "finite_N100.csv").read_text().splitlines()
    assert lines[0] == "t,theta_N,eta_N,theta,deviation" and len(lines) == 202


def test_sweep_command(scenario, tmp_path, capsys):
    assert main(["sweep", str(scenario), "--param", "delta", "--class", "20", "--values", "0.3,0.5",
                 "--out", str(tmp_path / "w")]) == EXIT_OK
    assert len((tmp_path / "w" / "sweep_delta.csv").read_text().splitlines()) == 3
    assert main(["sweep", str(scenario), "--param", "delta", "--class", "7", "--values", "0.3"]) == EXIT_CONFIG


def test_calibrate_command(scenario, capsys):
    assert main(["calibrate", str(scenario), "--targets", "0.45,0.95,0.97,0.98"]) == EXIT_OK
    assert "nu =" in capsys.readouterr().out
    assert main(["calibrate", str(scenario), "--targets", "0.99,0.999,0.999,0.999"]) == EXIT_CRITERIA


def test_config_errors_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"horizon": 0.9, "classes": [{"degree": 1, "weight": 1, "beta_E": 1.2}]}))
    assert main(["solve", str(bad)]) == EXIT_CONFIG
    assert "beta_E" in capsys.readouterr().err
    assert main(["solve", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_not_converged_exit_2(tmp_path):
    path = tmp_path / "short.json"
    dump_config(reference_scenario(n_steps=100, max_iterations=1).replace(output_dir=str(tmp_path / "o")), path)
    assert main(["solve", str(path)]) == EXIT_NOT_CONVERGED
    assert (tmp_path / "o" / "mean_field.csv").exists()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "seli_mfg", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "reproduce" in res.stdout
