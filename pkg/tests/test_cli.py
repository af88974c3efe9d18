import csv
import io
import json
import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from maxbv.cli import main, parse_list, parse_radius, parse_rat, UsageError
from maxbv.core import Interval, indicator
from maxbv.grid2d import grid_new


@pytest.fixture
def chi_file(tmp_path):
    p = tmp_path / "chi.json"
    p.write_text(indicator(Interval(-8, 8), [(0, 1)]).to_json())
    return str(p)


@pytest.fixture
def grid_file(tmp_path):
    V = np.zeros((8, 8))
    V[2:5, 3:6] = 1.0
    p = tmp_path / "g.json"
    p.write_text(grid_new((0.0, 1.0, 0.0, 1.0), 8, 8, V).to_json())
    return str(p)


def test_literals():
    assert parse_rat("0.1") == Fraction(1, 10)
    assert parse_rat("2^-3") == Fraction(1, 8)
    assert parse_rat("3/4") == Fraction(3, 4)
    assert parse_radius("inf") is None
    assert parse_list("2^-1..2^-3") == [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)]
    assert parse_list("1, 1/2") == [1, Fraction(1, 2)]
    with pytest.raises(UsageError):
        parse_rat("abc")
    with pytest.raises(UsageError):
        parse_radius("-1")
    with pytest.raises(UsageError):
        parse_list("2^-1..3^-2")


def test_eval(chi_file, capsys):
    assert main(["eval", "--f", chi_file, "--R", "4", "--x", "2"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].split("\t")[0] == "1/2"
    assert out[1] == "witness [0,2]"


def test_eval_json(chi_file, capsys):
    assert main(["eval", "--f", chi_file, "--R", "1", "--x", "3/2", "--json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["value"] == "1/2" and d["witness"] == ["1/2", "3/2"]


def test_eval_bad_radius(chi_file, capsys):
    assert main(["eval", "--f", chi_file, "--R", "-1", "--x", "0"]) == 2
    assert "radius" in capsys.readouterr().err


def test_eval_outside_domain(chi_file):
    assert main(["eval", "--f", chi_file, "--x", "100"]) == 2


def test_missing_file(tmp_path):
    assert main(["eval", "--f", str(tmp_path / "nope.json"), "--x", "0"]) == 2


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as e:
        main(["eval"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["suite", "nope"])
    assert e.value.code == 2


def test_profile_csv(chi_file, tmp_path, capsys):
    out = tmp_path / "p.csv"
    assert main(["profile", "--f", chi_file, "--R", "2", "--tol", "1e-4", "--out", str(out)]) == 0
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0][-1] == "tag"
    xs = [float(r[1]) for r in rows[1:]]
    assert xs == sorted(xs) and all(r[-1] == "plumbing" for r in rows[1:])
    assert "l1=" in capsys.readouterr().err


def test_check_bd_and_weak(chi_file, capsys):
    assert main(["check", "bd", "--f", chi_file, "--R", "4"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["passed"] is True
    assert main(["check", "weak", "--f", chi_file, "--t", "1/2,1,2"]) == 0


def test_check_needs_finite_R(chi_file):
    assert main(["check", "bd", "--f", chi_file, "--R", "inf"]) == 2


def test_check_counterexample(capsys):
    assert main(["check", "counterexample", "--n-max", "10"]) == 0
    assert "PASS" in capsys.readouterr().err


def test_check_growth1d_table(tmp_path, capsys):
    f = tmp_path / "chi.json"
    f.write_text(indicator(Interval(-64, 64), [(0, 1)]).to_json())
    table = tmp_path / "t.csv"
    assert main(["check", "growth1d", "--f", str(f), "--Rs", "1,4", "--table", str(table)]) == 0
    rows = list(csv.reader(io.StringIO(table.read_text())))
    assert rows[0][0] == "R_exact" and len(rows) == 3


def test_grid_tv(grid_file, capsys):
    assert main(["grid", "tv", "--f", grid_file]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["tv"] == pytest.approx(1.5) and d["coarea_tv"] == pytest.approx(1.5)


def test_grid_tv_needs_grid(chi_file):
    assert main(["grid", "tv", "--f", chi_file]) == 2


def test_grid_blowup_small(tmp_path, capsys):
    rep = tmp_path / "r.json"
    assert main(["grid", "blowup", "--deltas", "2^-3..2^-5", "--n", "256", "--report", str(rep)]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 3 and json.loads(rep.read_text())["passed"] is True


def test_grid_blowup_too_coarse():
    assert main(["grid", "blowup", "--deltas", "2^-3..2^-6", "--n", "64"]) == 2


def test_grid_growth(grid_file, capsys):
    assert main(["grid", "growth", "--f", grid_file, "--Rs", "1/4,1"]) == 0


def test_orlicz_norm(tmp_path, capsys):
    p = tmp_path / "one.json"
    p.write_text(indicator(Interval(0, 1), [(0, 1)]).to_json())
    assert main(["orlicz", "norm", "--f", str(p)]) == 0
    assert json.loads(capsys.readouterr().out)["luxemburg_norm"] == pytest.approx(0.5671432904, abs=1e-9)


def test_suite_and_replay(tmp_path, capsys):
    out = tmp_path / "s.json"
    assert main(["suite", "remark-log", "--out", str(out)]) == 0
    first = out.read_text()
    assert main(["suite", "remark-log", "--out", str(out)]) == 0
    assert out.read_text() == first
    capsys.readouterr()
    assert main(["replay", str(out)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert len(res) == 4 and all(r["matches_original"] for r in res)
    assert main(["replay", str(out), "--failed-only"]) == 0


def test_atomic_out_leaves_no_temp(chi_file, tmp_path):
    out = tmp_path / "v.txt"
    out.write_text("old")
    assert main(["eval", "--f", chi_file, "--x", "0", "--out", str(out)]) == 0
    assert out.read_text().startswith("1\t")
    assert [p for p in os.listdir(tmp_path) if p.startswith(".maxbv-")] == []


def test_console_entry_point(chi_file):
    r = subprocess.run([sys.executable, "-m", "maxbv", "eval", "--f", chi_file, "--x", "1/2", "--R", "inf"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("1\t")
