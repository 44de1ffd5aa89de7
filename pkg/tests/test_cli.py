import csv
import io
import json
import subprocess
import sys

import pytest

from boolvol import __version__
from boolvol.cli import main


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_params_example(capsys):
    code, out, _ = run(["params", "--pseq", "power:1,0.6667", "--r", "2", "--n", "500", "--format", "csv"], capsys)
    assert code == 0
    (row,) = rows(out)
    assert (row["ell_hat"], row["k_hat"], row["n_hat"]) == ("8", "63", "504")


def test_params_json_embeds_config(capsys):
    code, out, _ = run(["params", "--pseq", "power:1,0.6667", "--n", "500", "1000"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["version"] == __version__
    assert doc["config"]["pseq"] == "power:1,0.6667"
    assert len(doc["result"]["plans"]) == 2
    assert doc["result"]["assumptions"]["holds_B"]


def test_influence_example(capsys):
    code, out, _ = run(["influence", "--spec", "threshold", "--n", "4", "--T", "2", "--p", "0.5", "--format", "csv"], capsys)
    assert code == 0 and float(rows(out)[0]["total_influence"]) == pytest.approx(0.75)


def test_influence_bruteforce_limit(capsys):
    code, _, err = run(["influence", "--spec", "parity", "--n", "30", "--p", "0.5"], capsys)
    assert code == 2 and "n <= 22" in err


def test_validation_errors(capsys):
    assert run(["simulate", "--spec", "parity", "--n", "10", "--p", "0.3"], capsys)[0] == 2
    assert run(["simulate", "--spec", "majority", "--n", "10", "--p", "0.3", "--seed", "1"], capsys)[0] == 2
    assert run(["params", "--pseq", "power:1,1.5", "--n", "100"], capsys)[0] == 2
    assert run(["params", "--pseq", "power:0.9,0.1", "--n", "10"], capsys)[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--format", "xml"])
    assert exc.value.code == 2


def test_simulate_outputs_deterministic(tmp_path, capsys):
    args = ["simulate", "--spec", "counterexample", "--ell", "4", "--k", "3", "--H", "7.3", "--p", "0.2",
            "--replicas", "300", "--seed", "5"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + ["--out", str(a), "--threads", "1"]) == 0
    assert main(args + ["--out", str(b), "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["config"]["seed"] == 5 and "threads" not in doc["config"]
    assert doc["result"]["replicas"] == 300


def test_simulate_trajectory_dump(tmp_path, capsys):
    traj = tmp_path / "t.csv"
    code, out, _ = run(["simulate", "--spec", "parity", "--n", "20", "--p", "0.3", "--replicas", "10", "--seed", "2",
                        "--format", "csv", "--trajectory", str(traj)], capsys)
    assert code == 0 and rows(out)[0]["replicas"] == "10"
    events = rows(traj.read_text())
    assert list(events[0]) == ["time", "bit", "new_value", "f_value"]
    vals = [int(e["f_value"]) for e in events]
    assert all(a != b for a, b in zip(vals, vals[1:]))  # parity flips at every event


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"pseq": "power:1,0.6667", "n": [500], "format": "csv"}))
    code, out, _ = run(["params", "--config", str(cfg)], capsys)
    assert code == 0 and rows(out)[0]["n_hat"] == "504"
    code, out, _ = run(["params", "--config", str(cfg), "--n", "512", "--pseq", "power:1,0.6666666666666666"], capsys)
    assert rows(out)[0]["n_hat"] == "512"
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2")
    assert run(["params", "--config", str(bad)], capsys)[0] == 2


def test_sweep_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--pseq", "power:1,0.6666666666666666", "--n", "1000", "8000", "--replicas", "200",
                 "--seed", "3", "--format", "csv", "--out", str(out), "--threads", "1"])
    assert code == 0
    text = out.read_text()
    assert text.splitlines()[0] == (
        "n_hat,ell_hat,k_hat,p,H,T,p_g0_exact,p_g0_lo,p_g0_hi,p_f1_emp,EC_f_emp,EC_f_se,"
        "EC_h_exact,EC_h_asym,P_C0_h,tail_k8,tail_k32"
    )
    assert [r["n_hat"] for r in rows(text)] == ["1000", "8000"]
    tails = rows((tmp_path / "sweep.tails.csv").read_text())
    assert len(tails) == 14


def test_verify_passes(capsys):
    code, out, _ = run(["verify"], capsys)
    assert code == 0
    assert "FAIL" not in out and out.count("PASS") >= 10


def test_verify_failure_exit_code(monkeypatch, capsys):
    from boolvol import verify

    monkeypatch.setattr(verify, "CHECKS", verify.CHECKS + [("forced failure", lambda: (False, "x"))])
    code, out, _ = run(["verify"], capsys)
    assert code == 3 and "FAIL  forced failure" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "boolvol", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
