import csv
import io
import json
import subprocess
import sys

import pytest

from occupancy.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_moments_csv(capsys):
    code, out, _ = run(capsys, "moments", "--model", "explicit:p=0.6|0.4", "--n", "3", "--r", "1,2")
    assert code == 0
    r = rows(out)
    assert list(r[0]) == ["scheme", "param", "r", "phi", "var", "bound"]
    assert float(r[0]["phi"]) == pytest.approx(1.72)
    assert float(r[0]["var"]) == pytest.approx(0.2016)
    assert [x["r"] for x in r[1:]] == ["1", "2"]


def test_moments_poisson_json(capsys):
    code, out, _ = run(capsys, "moments", "--model", "explicit:p=0.6|0.4", "--poisson", "--t", "1",
                       "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert d["phi"] == pytest.approx(0.780868, abs=1e-6)
    assert d["cov"]["1,2"] == pytest.approx(-0.0469075, abs=1e-7)


def test_simulate_fixed_columns(capsys):
    code, out, _ = run(capsys, "simulate", "--model", "geometric:q=0.5", "--n", "100", "--reps", "5",
                       "--seed", "3", "--stats", "k,kr,s", "--r-max", "2")
    assert code == 0
    r = rows(out)
    assert len(r) == 5
    assert {"rep", "n_or_t", "K", "K_1", "K_2", "S"} <= set(r[0])
    assert [int(x["rep"]) for x in r] == list(range(5))


def test_simulate_is_deterministic(capsys):
    argv = ("simulate", "--model", "powerlaw:alpha=0.5", "--n", "1000", "--reps", "3", "--seed", "9")
    a = run(capsys, *argv)[1]
    b = run(capsys, *argv)[1]
    assert a == b


def test_simulate_discovery_columns(capsys):
    code, out, _ = run(capsys, "simulate", "--model", "powerlaw:alpha=0.5", "--stats", "nk,rk",
                       "--k-max", "10", "--reps", "2", "--seed", "1")
    assert code == 0
    r = rows(out)
    assert list(r[0]) == ["rep", "k", "N_k", "T_k", "p_tilde_k", "R_k"]
    assert len(r) == 20


def test_simulate_poisson_json(capsys, tmp_path):
    dest = tmp_path / "sim.json"
    code, out, _ = run(capsys, "simulate", "--model", "explicit:p=0.6|0.4", "--poisson", "--t", "1",
                       "--reps", "4", "--format", "json", "--out", str(dest))
    assert code == 0 and out == ""
    assert len(json.loads(dest.read_text())) == 4


def test_predict(capsys):
    code, out, _ = run(capsys, "predict", "--alpha", "0.5", "--D", "1", "--n", "1e6", "--k", "100")
    assert code == 0
    d = json.loads(out)
    assert d["regime"] == "proper"
    assert d["ratio_limit"]["1"] == pytest.approx(0.5)


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify", "--model", "explicit:p=0.6|0.4", "--n", "3", "--reps",
                       "2000", "--seed", "1", "--format", "json")
    assert code == 0
    assert json.loads(out)["verdict"] is True


def test_failing_verdict_exits_one(capsys):
    code, _, _ = run(capsys, "trace", "--model", "geometric:q=0.5", "--n", "1024", "--seed", "1",
                     "--tol", "band=[2.0, 3.0]", "--format", "json")
    assert code == 1


def test_config_file_with_flag_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "explicit:p=0.6|0.4", "n": 3, "reps": 500, "seed": 4,
                               "format": "json"}))
    code, out, _ = run(capsys, "verify", "--config", str(cfg), "--reps", "700")
    assert code == 0
    d = json.loads(out)
    assert d["config"]["reps"] == 700 and d["config"]["seed"] == 4


def test_usage_errors_exit_two(capsys):
    assert run(capsys, "moments", "--n", "3")[0] == 2
    assert run(capsys, "moments", "--model", "zeta:s=2", "--n", "3")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "verify", "--model", "geometric:q=0.5")[0] == 2
    code, _, err = run(capsys, "verify", "--config", "/nonexistent.json")
    assert code == 2 and "error" in err


def test_console_script():
    p = subprocess.run([sys.executable, "-m", "occupancy.cli", "moments", "--model",
                        "geometric:q=0.5", "--n", "2"], capture_output=True, text=True)
    assert p.returncode == 0
    assert float(rows(p.stdout)[0]["phi"]) == pytest.approx(5 / 3, abs=1e-9)
