import json
import os
import subprocess
import sys

import pytest

from ztdn.cli import main


def test_simulate(fig2_path, tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["simulate", str(fig2_path), "--out", str(out), "--access-log", str(tmp_path / "a.csv"), "--kpi-csv", str(tmp_path / "k.csv")])
    assert code == 0
    assert capsys.readouterr().out.strip() == "net1 Grant, net2 Deny, net3 Deny"
    assert json.loads(out.read_text())
    assert (tmp_path / "a.csv").read_text().count("\n") == 4
    assert (tmp_path / "k.csv").read_text().count("\n") == 4


def test_simulate_is_byte_identical(fig2_path, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["simulate", str(fig2_path), "--out", str(a), "--seed", "9"]) == 0
    assert main(["simulate", str(fig2_path), "--out", str(b), "--seed", "9"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("networks: 3\nbogus: 1\n")
    assert main(["simulate", str(bad), "--out", str(tmp_path / "o.json")]) == 2
    err = capsys.readouterr().err
    assert "bad.yaml: line" in err
    assert main(["simulate", str(tmp_path / "missing.yaml"), "--out", str(tmp_path / "o.json")]) == 2


def test_verify_builtin(capsys):
    assert main(["verify", "builtin:fig4"]) == 0
    out = capsys.readouterr().out
    assert "deadlock: A[] not deadlock -> Holds" in out
    assert "tamper-safety: A[] PDP.Grant imply tampered == 0 -> Holds" in out
    assert "reauth: E<> User.ReAuthenticating -> Holds" in out
    assert "witness" in out


def test_verify_tamper_variant(capsys):
    assert main(["verify", "builtin:fig4-tamper-enabled", "--query", "tamper-safety"]) == 1
    out = capsys.readouterr().out
    assert "-> Violated" in out and "counterexample" in out


def test_verify_formula_and_bound(capsys):
    assert main(["verify", "builtin:fig4", "--query", "E<> User.Denied"]) == 0
    assert main(["verify", "builtin:fig4", "--query", "deadlock", "--max-states", "5"]) == 3
    assert "Unknown" in capsys.readouterr().out


def test_verify_errors(tmp_path, capsys):
    assert main(["verify", "builtin:fig4", "--query", "nope"]) == 2
    assert main(["verify", "builtin:fig4", "--query", "E<> Nobody.Here"]) == 2
    bad = tmp_path / "m.yaml"
    bad.write_text("automata: 3\n")
    assert main(["verify", str(bad)]) == 2
    assert "m.yaml: line" in capsys.readouterr().err


def test_verify_deterministic(capsys):
    main(["verify", "builtin:fig4-tamper-enabled"])
    first = capsys.readouterr().out
    main(["verify", "builtin:fig4-tamper-enabled"])
    assert capsys.readouterr().out == first


def test_bench_and_report(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["bench", "--timing", "sim", "--out", str(a)]) == 0
    assert "450 samples, 450 granted, 0 denied" in capsys.readouterr().out
    assert main(["bench", "--timing", "sim", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    capsys.readouterr()
    assert main(["report", str(a), "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert [r["count"] for r in rows] == [150, 150, 150]
    assert main(["report", str(a)]) == 0
    assert "SearchAndCount" in capsys.readouterr().out


def test_bench_user_role(tmp_path, capsys):
    assert main(["bench", "--role", "user", "--requests", "2", "--runs", "1", "--out", str(tmp_path / "u.csv")]) == 0
    assert "0 granted, 6 denied" in capsys.readouterr().out


def test_report_empty(tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("")
    assert main(["report", str(empty)]) == 2


def test_usage_errors():
    with pytest.raises(SystemExit) as info:
        main(["bench", "--requests", "0", "--out", "x.csv"])
    assert info.value.code == 2
    with pytest.raises(SystemExit):
        main([])


def test_outputs_independent_of_hash_seed(fig2_path, tmp_path):
    outs = []
    for seed in ("1", "2"):
        d = tmp_path / seed
        d.mkdir()
        env = dict(os.environ, PYTHONHASHSEED=seed)
        for args in (["simulate", str(fig2_path), "--out", "r.json"], ["bench", "--timing", "sim", "--out", "b.csv"]):
            subprocess.run([sys.executable, "-m", "ztdn.cli", *args], cwd=d, env=env, check=True, capture_output=True)
        verify = subprocess.run(
            [sys.executable, "-m", "ztdn.cli", "verify", "builtin:fig4-tamper-enabled"], env=env, capture_output=True, text=True
        )
        outs.append(((d / "r.json").read_bytes(), (d / "b.csv").read_bytes(), verify.stdout))
    assert outs[0] == outs[1]
