import json
import os
import subprocess
import sys

import pytest

from balancelab.cli import run


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def fib_file(tmp_path):
    path = tmp_path / "fib.json"
    path.write_text(json.dumps({"rules": {"0": "01", "1": "0"}, "seed": "0"}))
    return str(path)


def test_generate_empty(capsys, fib_file):
    code, out, _ = call(capsys, "generate", "--sub", fib_file, "--len", "0")
    assert code == 0 and out == ""


def test_generate_prefix(capsys):
    code, out, _ = call(capsys, "generate", "--source", "tribonacci", "--len", "7")
    assert code == 0 and out.strip() == "abacaba"


def test_balance_uniform_scan(capsys):
    code, out, _ = call(capsys, "balance", "--source", "tribonacci", "--umax", "8", "--nmax", "300",
                        "--horizon", "100000")
    assert code == 0 and json.loads(out)["global_max"] == 2


def test_balance_csv(capsys):
    code, out, _ = call(capsys, "balance", "--source", "tribonacci", "--pattern", "a", "--nmax", "5",
                        "--horizon", "1000", "--emit", "csv")
    assert code == 0 and out.splitlines()[0] == "n,B" and len(out.splitlines()) == 6


def test_recurrence_formula_table(capsys):
    code, out, _ = call(capsys, "appendix-a", "--nmax", "28", "--horizon", "10000")
    rep = json.loads(out)
    assert code == 0 and rep["all_match"] and len(rep["rows"]) == 27


def test_out_dir_writes_manifest(capsys, tmp_path):
    out_dir = tmp_path / "run"
    code, _, _ = call(capsys, "complexity", "--source", "fibonacci-word", "--nmax", "5", "--horizon", "500",
                      "--out", str(out_dir))
    assert code == 0
    report = json.loads((out_dir / "complexity.json").read_text())
    manifest = json.loads((out_dir / "complexity.manifest.json").read_text())
    assert manifest["command"] == "complexity" and "wall_clock_seconds" in manifest
    assert "wall_clock" not in json.dumps(report)


def test_reports_are_deterministic(capsys):
    first = call(capsys, "recurrence", "--source", "tribonacci", "--nmax", "6", "--horizon", "2000")[1]
    second = call(capsys, "recurrence", "--source", "tribonacci", "--nmax", "6", "--horizon", "2000")[1]
    assert first == second


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["generate", "--bogus"],
    ["generate", "--source", "no-such-word", "--len", "3"],
    ["complexity", "--sub", "{bad json", "--nmax", "3", "--horizon", "10"],
    ["toeplitz", "--spec", '{"kind": "nope"}'],
    ["generate", "--source", "tribonacci", "--cf", "cf: (1)", "--len", "3"],
])
def test_invalid_input_exits_two(capsys, argv):
    assert call(capsys, *argv)[0] == 2


def test_bound_defaults(capsys):
    code, out, _ = call(capsys, "bound")
    assert code == 0 and 4602.6 <= json.loads(out)["bound"] <= 4602.8


def test_sturmian_and_ar(capsys, tmp_path):
    code, out, _ = call(capsys, "sturmian", "--cf", "cf: (1)", "--len", "500", "--nmax", "20")
    rep = json.loads(out)
    assert code == 0 and rep["sadic_equals_rotation"] and rep["complexity_n_plus_1"]
    ds = tmp_path / "abc.txt"
    ds.write_text("letters: a b c\n(a b c)\n")
    code, out, _ = call(capsys, "arnoux-rauzy", "--directive", str(ds), "--nmax", "20", "--horizon", "5000")
    assert code == 0 and json.loads(out)["complexity_matches_(d-1)n+1"]


def test_decisive_and_blockcode(capsys, tmp_path):
    sub = tmp_path / "trib.txt"
    sub.write_text("a -> a b\nb -> a c\nc -> a\n")
    code, out, _ = call(capsys, "decisive", "--sub", str(sub), "--pattern", "ab")
    assert code == 0 and json.loads(out)["q"] == {"a": 1, "b": 0, "c": 0}
    code, out, _ = call(capsys, "blockcode", "--source", "thue-morse", "--code", "fig1", "--len", "6")
    assert code == 0 and json.loads(out)["prefix"] == "012023"


def test_dfao_and_toeplitz(capsys, fib_file):
    code, out, _ = call(capsys, "dfao", "--from-sub", fib_file, "--len", "8")
    assert code == 0 and json.loads(out)["prefix"] == "01001010"
    code, out, _ = call(capsys, "toeplitz", "--spec", '{"kind": "pd", "depth": 4}', "--len", "16")
    rep = json.loads(out)
    assert code == 0 and rep["prefix"] == "0100010101000100" and rep["validation"]["valid"]


def test_powerfree_and_discrepancy(capsys):
    code, out, _ = call(capsys, "powerfree", "--source", "thue-morse", "--horizon", "2000")
    assert code == 0 and json.loads(out)["exponent"] == 2
    code, out, _ = call(capsys, "discrepancy", "--source", "fibonacci-word", "--pattern", "0", "--nmax", "50",
                        "--horizon", "5000", "--check-consistency")
    assert code == 0 and json.loads(out)["consistency"]["consistent"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "balancelab", "generate", "--source", "fibonacci-word",
                           "--len", "8"], capture_output=True, text=True, env={**os.environ})
    assert proc.returncode == 0 and proc.stdout.strip() == "01001010"
