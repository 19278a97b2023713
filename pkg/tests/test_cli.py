import json
import subprocess
import sys

import pytest

from stochvortex import cli
from stochvortex.ensemble import EnsembleSummary, ExperimentConfig
from stochvortex.galerkin import NumericalFailure

SMALL = ["--vortex-count", "8", "--noise-cutoff", "4", "--dt", "0.001", "--t-final", "0.02",
         "--sample-times", "0,0.01,0.02", "--lags", "0,0.01", "--ensemble-size", "4"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_identities_pass(capsys):
    code, out, _ = run(capsys, "identities")
    assert code == 0
    assert out.count("[PASS]") == 3


def test_simulate_requires_seed(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", *SMALL])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["galerkin"])
    assert exc.value.code == 2


def test_invalid_flag_value_is_usage_error(capsys):
    code, _, err = run(capsys, "simulate", "--seed", "1", *SMALL, "--dt", "-1")
    assert code == 2
    assert "dt" in err


def test_simulate_writes_json_and_csv_with_seed_header(capsys, tmp_path):
    prefix = tmp_path / "out" / "run"
    code, out, _ = run(capsys, "simulate", "--seed", "7", *SMALL,
                       "--observables", "w[1,0],w[0,1],sobolev", "--output", str(prefix))
    assert code == 0 and "wrote" in out
    summary = json.loads((tmp_path / "out" / "run.json").read_text())
    cfg = ExperimentConfig.from_dict(summary["config"])
    assert summary["master_seed"] == 7 and summary["config_hash"] == cfg.config_hash()
    assert cfg.observables == ("w[1,0]", "w[0,1]", "sobolev")
    lines = (tmp_path / "out" / "run.csv").read_text().splitlines()
    assert lines[0] == f"# config_hash={cfg.config_hash()} master_seed=7"
    assert lines[1] == "t,name,value"
    assert len(lines) == 2 + 3 * 3 * 2


def test_rerun_from_config_file_reproduces(capsys, tmp_path):
    run(capsys, "simulate", "--seed", "5", *SMALL, "--output", str(tmp_path / "a"))
    first = json.loads((tmp_path / "a.json").read_text())
    (tmp_path / "cfg.json").write_text(json.dumps(first["config"]))
    code, _, _ = run(capsys, "simulate", "--seed", "5", "--config", str(tmp_path / "cfg.json"),
                     "--output", str(tmp_path / "b"))
    assert code == 0
    second = json.loads((tmp_path / "b.json").read_text())
    first["config"]["output"] = second["config"]["output"]
    assert second["mean"] == first["mean"]
    assert second["autocovariance"] == first["autocovariance"]


def test_galerkin_subcommand(capsys):
    code, out, _ = run(capsys, "galerkin", "--seed", "2", "--dt", "0.0002", "--t-final",
                       "0.002", "--sample-times", "0,0.002", "--ensemble-size", "3")
    assert code == 0
    s = EnsembleSummary.from_json(out)
    assert s.config["system"] == "galerkin" and s.count == 3


def test_galerkin_unstable_step_is_usage_error(capsys):
    code, _, err = run(capsys, "galerkin", "--seed", "2", "--galerkin-cutoff", "6",
                       "--dt", "0.001")
    assert code == 2
    assert "dt" in err


def test_moments(capsys):
    code, out, _ = run(capsys, "moments", "quadratic", "--vortices", "9")
    assert code == 0 and json.loads(out)["second_moment"] == pytest.approx(3.0)
    code, out, _ = run(capsys, "moments", "r", "--l", "1,0", "--m", "0,1", "--cutoff", "2")
    d = json.loads(out)
    assert code == 0 and d["route"] == "S" and d["second_moment"] > 0
    code, _, err = run(capsys, "moments", "r", "--cutoff", "40")
    assert code == 2 and "max_cutoff" in err


def test_compare_pass_and_fail(capsys, tmp_path):
    run(capsys, "simulate", "--seed", "1", *SMALL, "--output", str(tmp_path / "a"))
    run(capsys, "simulate", "--seed", "2", *SMALL, "--output", str(tmp_path / "b"))
    code, out, _ = run(capsys, "compare", str(tmp_path / "a.json"), str(tmp_path / "a.json"))
    assert code == 0 and "PASS" in out
    code, out, _ = run(capsys, "compare", str(tmp_path / "a.json"), str(tmp_path / "b.json"),
                       "--n-se", "0")
    assert code == 1 and "FAIL" in out
    code, _, _ = run(capsys, "compare", str(tmp_path / "a.json"), str(tmp_path / "missing.json"))
    assert code == 2


def test_accept_subset(capsys):
    code, out, _ = run(capsys, "accept", "--only", "1,3")
    assert code == 0
    assert "2/2 criteria passed" in out


def test_numerical_failure_exit_code(capsys, monkeypatch):
    def boom(cfg, workers=1):
        raise NumericalFailure("non-finite coefficients")
    monkeypatch.setattr(cli, "run_ensemble", boom)
    code, _, err = run(capsys, "galerkin", "--seed", "1")
    assert code == 3 and "numerical failure" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "stochvortex", "moments", "quadratic"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["second_moment"] == pytest.approx(3.0)
