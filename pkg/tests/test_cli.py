import csv
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from bnndual import bnn, model
from bnndual.cli import _prepare_argv, main

from oracles import ralphs_value


@pytest.fixture
def files(tmp_path):
    arch, data = bnn.xor_dataset()
    (tmp_path / "xor.txt").write_text(bnn.dump_dataset(arch, data))
    (tmp_path / "m.json").write_text(model.dumps(model.ralphs_example(b=1)))
    (tmp_path / "h.json").write_text('{"left_slope": "0", "pieces": [["0", "1/2"]]}\n')
    (tmp_path / "ft.json").write_text('{"left_slope": "-1", "pieces": [["0", "2"]]}\n')
    (tmp_path / "bad.json").write_text('{"num_rows": 1,\n "A": [[1]\n')
    return tmp_path


def test_negative_range_arguments_are_glued():
    assert _prepare_argv(["sweep", "--grid", "-2:2:1/8"]) == ["sweep", "--grid=-2:2:1/8"]
    assert _prepare_argv(["--out", "-x"]) == ["--out", "-x"]


def test_example_sweep_matches_oracle(files, capsys):
    out = files / "s.csv"
    assert main(["example-ralphs", "--sweep", "-2:2:1/8", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 33
    for r in rows:
        assert Fraction(r["value"]) == ralphs_value(Fraction(r["offset"]))
    text = capsys.readouterr().out
    assert "f(1) <= 1/2, f(-3/2) <= 0, fbar(1) <= 2, fbar(-1) <= 1, f(0) = 0" in text
    assert "D(0) = [-1, 2]" in text and "gap 0" in text


def test_train_bnn_beats_baseline(files):
    out = files / "w.json"
    assert main(["train-bnn", "--dataset", str(files / "xor.txt"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert Fraction(doc["loss"]) <= doc["random_baseline"]["best_loss"]
    assert doc["forward_loss"] == int(Fraction(doc["loss"]))


def test_train_via_dual(files):
    out = files / "w.json"
    assert main(["train-bnn", "--dataset", str(files / "xor.txt"), "--baseline", "0", "--via-dual",
                 "--grid", "-1:1:1/2", "--steps", "10", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["via_dual"]["value_at_0"] == doc["loss"]


def test_validate_malformed_exit_2(files, capsys):
    assert main(["validate", "--model", str(files / "bad.json")]) == 2
    assert "bad.json:" in capsys.readouterr().err


def test_validate_good_model(files):
    assert main(["validate", "--model", str(files / "m.json")]) == 0


def test_missing_file_exit_2(files):
    assert main(["solve", "--model", str(files / "nope.json")]) == 2


def test_solve_and_exit_codes(files, tmp_path):
    out = tmp_path / "sol.json"
    assert main(["solve", "--model", str(files / "m.json"), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["objective"] == "1/2"
    infeasible = tmp_path / "inf.json"
    infeasible.write_text(model.dumps(model.ralphs_example(b=1, int_cap=0, cont_cap=0)))
    assert main(["solve", "--model", str(infeasible)]) == 1


def test_dual_check_codes(files, capsys):
    assert main(["dual-check", "--model", str(files / "m.json"), "--function", str(files / "h.json")]) == 0
    assert "gap 0" in capsys.readouterr().out
    assert main(["dual-check", "--model", str(files / "m.json"), "--function", str(files / "ft.json")]) == 1


def test_dual_fit_outputs_are_byte_identical(files):
    a, b = files / "a.json", files / "b.json"
    for out in (a, b):
        assert main(["dual-fit", "--model", str(files / "m.json"), "--at", "1", "--steps", "30",
                     "--seed", "3", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (files / "a.samples.csv").read_bytes() == (files / "b.samples.csv").read_bytes()
    assert (files / "a.trace.csv").read_bytes() == (files / "b.trace.csv").read_bytes()
    assert json.loads(a.read_text())["report"]["feasible"]


def test_dual_fit_match_window(files):
    out = files / "fit.json"
    assert main(["dual-fit", "--model", str(files / "m.json"), "--grid", "-1/2:1/2:1/20", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["function"] == {"left_slope": "-1", "pieces": [["0", "2"]]}


def test_sweep_and_encode(files, capsys):
    assert main(["sweep", "--model", str(files / "m.json"), "--grid", "-1:1:1"]) == 0
    assert "offset,value,status" in capsys.readouterr().out
    out = files / "enc.json"
    assert main(["encode-bnn", "--dataset", str(files / "xor.txt"), "--out", str(out)]) == 0
    assert model.loads(out.read_text()).num_rows == 64


def test_module_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "bnndual", "validate", "--model", str(files / "bad.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
