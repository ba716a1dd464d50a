import csv
import io
import json
import subprocess
import sys

import jsonschema
import pytest

from qslcheck.cli import main
from qslcheck.report import REPORT_SCHEMA

from helpers import POPULATE_INV, POPULATE_LOOP, SWAP, SWAP_POST, SWAP_PRE, U1, U2, A2


@pytest.fixture
def files(tmp_path):
    texts = {
        "u1.qsl": U1, "u2.qsl": U2, "true.qsl": "[true]", "emp.qsl": "[emp]",
        "swap.hpgcl": SWAP, "swap_post.qsl": SWAP_POST, "swap_pre.qsl": SWAP_PRE,
        "inv.qsl": POPULATE_INV, "populate.hpgcl": POPULATE_LOOP, "post.qsl": A2,
        "a.sl": "(E v: x |-> v) * y |-> x", "emp.sl": "emp", "bad.qsl": "[x |-> ",
    }
    out = {}
    for name, text in texts.items():
        p = tmp_path / name
        p.write_text(text + "\n")
        out[name] = str(p)
    return out


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--json")
    rep = json.loads(out)
    jsonschema.validate(rep, REPORT_SCHEMA)
    return code, rep


def test_evalset_running_example(capsys, files):
    code, out, _ = run(capsys, "evalset", files["u1.qsl"])
    assert code == 0
    assert out.splitlines() == ["0", "2/5", "3/5", "1", "size 4", "bound 8"]


def test_atleast_running_example(capsys, files):
    code, out, _ = run(capsys, "atleast", "--alpha", "1/2", files["u1.qsl"])
    assert code == 0 and out.strip() == "x |-> y | x |-> y * y |-> z & x |-> y"
    code, out, _ = run(capsys, "atleast", "--alpha", "0.5", "--no-true-elim", files["u1.qsl"])
    assert "true" in out


def test_check_running_example(capsys, files):
    code, rep = run_json(capsys, "check", files["u1.qsl"], files["u2.qsl"], "--backend", "oracle")
    assert code == 0 and rep["verdict"] == "entails"
    assert [o["alpha"] for o in rep["obligations"]] == ["2/5", "3/5", "1"]
    assert rep["bounded"] is True
    code, rep = run_json(capsys, "check", files["u1.qsl"], files["u2.qsl"], "--keep-zero")
    assert len(rep["obligations"]) == 4


def test_check_failure_exit_and_counterexample(capsys, files):
    code, rep = run_json(capsys, "check", files["true.qsl"], files["emp.qsl"])
    assert code == 1 and rep["verdict"] == "fails"
    assert rep["result"]["failing_alpha"] == "1"
    assert set(rep["result"]["counterexample"]) == {"stack", "heap"}


def test_check_smt_without_solver_is_error(capsys, files, monkeypatch):
    monkeypatch.delenv("QSL_SOLVER_CMD", raising=False)
    code, rep = run_json(capsys, "check", files["u1.qsl"], files["u2.qsl"], "--backend", "smt")
    assert code == 3 and rep["verdict"] == "error"
    assert rep["bounded"] is False


def test_check_smt_with_fake_solver(capsys, files, tmp_path):
    fake = tmp_path / "unsat.py"
    fake.write_text("print('unsat')\n")
    code, _, _ = run(capsys, "check", files["u1.qsl"], files["u2.qsl"], "--backend", "smt",
                     "--solver-cmd", f"{sys.executable} {fake}")
    assert code == 0


def test_usage_errors_exit_64(capsys, files):
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 64
    with pytest.raises(SystemExit) as info:
        main(["check", files["u1.qsl"], "--bogus"])
    assert info.value.code == 64
    code, _, err = run(capsys, "evalset", "/nonexistent.qsl")
    assert code == 64 and "cannot read" in err
    code, _, err = run(capsys, "evalset", files["bad.qsl"])
    assert code == 64 and "1:" in err


def test_loop_in_wlp_is_input_error(capsys, files):
    code, _, err = run(capsys, "wlp", files["populate.hpgcl"], files["post.qsl"])
    assert code == 64 and "invariant" in err


def test_json_is_deterministic(capsys, files):
    args = ("check", files["u1.qsl"], files["u2.qsl"], "--json", "--seed", "3")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second
    assert "timing" not in json.loads(first)


def test_timing_flag(capsys, files):
    _, rep = run_json(capsys, "evalset", files["u1.qsl"], "--timing")
    assert rep["timing"]["seconds"] >= 0


def test_domain_flags_and_config(capsys, files, tmp_path):
    _, rep = run_json(capsys, "evalset", files["u1.qsl"], "--values", "0..4", "--locs", "1,2")
    assert rep["domain"]["values"] == [0, 1, 2, 3, 4] and rep["domain"]["locations"] == [1, 2]
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"values": [0, 1, 2], "locs": [1, 2], "max-cells": 2}))
    _, rep = run_json(capsys, "evalset", files["u1.qsl"], "--config", str(cfg))
    assert rep["domain"]["values"] == [0, 1, 2] and rep["domain"]["max_heap_cells"] == 2
    _, rep = run_json(capsys, "evalset", files["u1.qsl"], "--config", str(cfg), "--max-cells", "1")
    assert rep["domain"]["max_heap_cells"] == 1


def test_bad_domain_is_input_error(capsys, files):
    code, _, err = run(capsys, "evalset", files["u1.qsl"], "--locs", "7")
    assert code == 64


def test_stdin_input(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO(U1))
    code, out, _ = run(capsys, "evalset", "-")
    assert code == 0 and out.startswith("0\n2/5")


def test_parse_kinds(capsys, files):
    code, rep = run_json(capsys, "parse", files["swap.hpgcl"], "--kind", "program")
    assert code == 0 and "tmp1 := <x>" in rep["result"]["text"]
    _, rep = run_json(capsys, "parse", files["u1.qsl"])
    assert rep["result"]["psize"] == 2


def test_wlp_no_wand(capsys, files):
    code, rep = run_json(capsys, "wlp", files["swap.hpgcl"], files["swap_post.qsl"], "--no-wand")
    assert code == 0 and rep["result"]["rules"] == "nowand"
    assert "-*" not in rep["result"]["pre"]
    assert rep["result"]["closure_violations"] == []
    _, rep = run_json(capsys, "wlp", files["swap.hpgcl"], files["swap_post.qsl"])
    assert "-*" in rep["result"]["pre"]


def test_invariant_check(capsys, files):
    code, rep = run_json(capsys, "invariant-check", files["inv.qsl"], files["populate.hpgcl"],
                         files["post.qsl"])
    assert code == 0 and rep["verdict"] == "entails"
    code, _, err = run(capsys, "invariant-check", files["inv.qsl"], files["swap.hpgcl"],
                       files["post.qsl"])
    assert code == 64


def test_fragment(capsys, files):
    code, out, _ = run(capsys, "fragment", files["u2.qsl"])
    assert code == 0 and out.splitlines()[:2] == ["qsh: true", "eqsh: true"]
    _, rep = run_json(capsys, "fragment", files["u2.qsl"])
    assert set(rep["result"]["capabilities"]["connectives"]) <= {"and", "or", "exists", "star"}


def test_prenex(capsys, files):
    code, out, _ = run(capsys, "prenex", files["a.sl"])
    assert code == 0 and out.strip() == "E v: x |-> v * y |-> x"


def test_emit_smt(capsys, files, tmp_path):
    target = tmp_path / "out.smt2"
    code, out, _ = run(capsys, "emit-smt", files["a.sl"], files["emp.sl"], "-o", str(target))
    assert code == 64  # quantifier under a quantifier-free logic
    code, out, _ = run(capsys, "emit-smt", files["emp.sl"], files["emp.sl"], "-o", str(target),
                       "--dialect", "cvc-modern")
    assert code == 0 and "sep.emp" in target.read_text()
    code, out, _ = run(capsys, "emit-smt", "--from-qsl", files["swap_pre.qsl"],
                       files["swap_pre.qsl"])
    assert code == 0 and out.startswith("(set-logic QF_ALL_SUPPORTED)")


@pytest.mark.parametrize("answer,code", [("unsat", 0), ("sat", 1), ("unknown", 2), ("oops", 3)])
def test_emit_smt_run_exit_codes(capsys, files, tmp_path, answer, code):
    fake = tmp_path / "fake.py"
    fake.write_text(f"print({answer!r})\n")
    got, _, _ = run(capsys, "emit-smt", files["emp.sl"], files["emp.sl"], "--run",
                    "--solver-cmd", f"{sys.executable} {fake}")
    assert got == code


def test_fuzz_report(capsys, tmp_path):
    d = tmp_path / "report"
    code, out, _ = run(capsys, "fuzz", "--n", "25", "--seed", "7", "--report-dir", str(d))
    assert code == 0 and out.startswith("25/25 agreements")
    rows = list(csv.DictReader(open(d / "fuzz.csv")))
    assert len(rows) == 25 and all(r["agree"] == "True" for r in rows)
    assert (d / "sizes.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_fuzz_is_deterministic(capsys):
    _, a, _ = run(capsys, "fuzz", "--n", "15", "--seed", "11", "--json")
    _, b, _ = run(capsys, "fuzz", "--n", "15", "--seed", "11", "--json")
    assert a == b
    jsonschema.validate(json.loads(a), REPORT_SCHEMA)


def test_console_script(files):
    out = subprocess.run([sys.executable, "-m", "qslcheck.cli", "evalset", files["u1.qsl"]],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("0\n")
