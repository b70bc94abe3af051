import json
import subprocess
import sys

import pytest

from bilevel_procurement.cli import audit_micro_suite, main
from bilevel_procurement.instances import tiny_bilevel_instance, write_instance
from bilevel_procurement.reports import parse_grid, read_csv

FAST = ["--particles", "4", "--iters", "3", "--beam", "10", "--stride", "auto"]


@pytest.fixture
def instance_file(tmp_path):
    path = tmp_path / "inst.json"
    assert main(["generate", "--suppliers", "2", "--items", "1", "--seed", "7", "--out", str(path)]) == 0
    return path


def test_generate_then_solve(instance_file, tmp_path):
    out = tmp_path / "r.csv"
    assert main(["solve", str(instance_file), *FAST, "--out", str(out)]) == 0
    rows = read_csv(out)
    kinds = {r["record"] for r in rows}
    assert {"trace", "allocation", "objective"} <= kinds


def test_generate_to_stdout(capsys):
    assert main(["generate", "--suppliers", "1", "--items", "2", "--seed", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["suppliers"]) == 1


def test_solve_is_byte_identical(instance_file, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["solve", str(instance_file), *FAST, "--seed", "3", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_env_seed(instance_file, tmp_path, monkeypatch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    monkeypatch.setenv("BILEVEL_SEED", "5")
    assert main(["solve", str(instance_file), *FAST, "--out", str(a)]) == 0
    monkeypatch.delenv("BILEVEL_SEED")
    assert main(["solve", str(instance_file), *FAST, "--seed", "5", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_invalid_instance(tmp_path, capsys):
    path = tmp_path / "bad.json"
    write_instance(tiny_bilevel_instance(0), path)
    doc = json.loads(path.read_text())
    doc["buyer"]["lt_lower"], doc["buyer"]["lt_upper"] = 5, 3
    path.write_text(json.dumps(doc))
    assert main(["solve", str(path), *FAST]) == 1
    assert "due window inverted" in capsys.readouterr().err


def test_missing_file():
    assert main(["solve", "/nonexistent/inst.json"]) == 1


def test_infeasible_exit(tmp_path):
    path = tmp_path / "tight.json"
    write_instance(tiny_bilevel_instance(0), path)
    doc = json.loads(path.read_text())
    doc["horizon"] = 1
    for s in doc["suppliers"]:
        s["orc"] = [s["pt"][0]]
        s["ovc"] = [0.0]
    path.write_text(json.dumps(doc))
    assert main(["solve", str(path), *FAST]) == 2


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["solve", "x.json", "--bogus"])
    assert exc.value.code == 64


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "bilevel_procurement", "frobnicate"], capture_output=True, text=True)
    assert res.returncode == 64
    assert "usage" in res.stderr


def test_bad_grid(instance_file):
    assert main(["sweep", str(instance_file), "--w1", "1:0:0.1"]) == 64
    assert main(["sweep", str(instance_file), "--w1", "0:2:1"]) == 64


def test_sweep_grid(tmp_path):
    path = tmp_path / "tiny.json"
    write_instance(tiny_bilevel_instance(3), path)
    out = tmp_path / "sweep.csv"
    assert main(["sweep", str(path), "--w1", "0:1:0.5", "--gamma", "0.8:0.82:0.01",
                 "--particles", "3", "--iters", "1", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [(r["w1"], r["gamma"]) for r in rows][:3] == [("0.000000", "0.800000"), ("0.000000", "0.810000"), ("0.000000", "0.820000")]
    assert len(rows) == 9


def test_compare(tmp_path):
    suite = tmp_path / "suite"
    suite.mkdir()
    for s in range(2):
        write_instance(tiny_bilevel_instance(s), suite / f"p{s}.json")
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--suite", str(suite), "--reps", "2", "--solvers", "astar,greedy",
                 *FAST, "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 2 and "astar_deviation" in rows[0]
    assert main(["compare", "--suite", str(suite), "--solvers", "astar,tabu"]) == 64
    assert main(["compare", "--suite", str(tmp_path / "empty")]) == 1


def test_audit_small(capsys):
    assert main(["audit", "--micro-suite", "--seeds", "15"]) == 0
    assert "exactness mismatches: 0/15" in capsys.readouterr().out


def test_audit_budget():
    assert main(["audit", "--micro-suite", "--seeds", "5", "--max-states", "2"]) == 3


def test_audit_function_reports(capsys):
    import io

    buf = io.StringIO()
    assert audit_micro_suite(5, seed=2, out=buf)
    assert "heuristic overestimates: 0" in buf.getvalue()


class TestGrid:
    def test_fig6_cardinality(self):
        assert len(parse_grid("0:1:0.1")) == 11
        assert len(parse_grid("0.8:0.97:0.01")) == 18

    def test_single_point(self):
        assert parse_grid("0.4") == [0.4]

    def test_malformed(self):
        for bad in ("a:b:c", "0:1", "0:1:0", "1:0:0.1"):
            with pytest.raises(ValueError):
                parse_grid(bad)
