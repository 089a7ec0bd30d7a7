import csv
import json
import math
import shutil
from pathlib import Path

import pytest

from rmslyap.cli import convergence_grid, dumps, fmt_float, main
from rmslyap.errors import ValidationError
from rmslyap.scenario import SEED_ENV, load_scenario, scenario_from_dict

PACK = Path(__file__).resolve().parent.parent / "scenarios"


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def strip_timing(text):
    bundle = json.loads(text)
    bundle.pop("timing")
    return bundle


ALL_ONES = {
    "A": [[1, 1], [1, 1]],
    "driver": {"kind": "iid", "p": [0.25] * 4},
    "d_table": [[1, 1], [1, 4], [4, 1], [4, 4]],
}


def test_fmt_float_roundtrips():
    for x in (0.1, 1 / 3, 1e-300, 2.5e17):
        assert float(fmt_float(x)) == x
    assert fmt_float(-math.inf) == "-inf" and fmt_float(math.nan) == "nan"
    assert json.loads(dumps({"a": [0.1, 2]})) == {"a": [0.1, 2]}


def test_convergence_grid():
    g = convergence_grid(10_000)
    assert g[0] == 1 and g[-1] == 10_000
    assert len(g) <= 201 and all(a < b for a, b in zip(g, g[1:]))


def test_seed_precedence(monkeypatch):
    sc = scenario_from_dict(ALL_ONES)
    monkeypatch.delenv(SEED_ENV, raising=False)
    assert sc.resolve_seed() == 0
    monkeypatch.setenv(SEED_ENV, "17")
    assert sc.resolve_seed() == 17
    assert scenario_from_dict({**ALL_ONES, "defaults": {"seed": 5}}).resolve_seed() == 5
    assert scenario_from_dict({**ALL_ONES, "defaults": {"seed": 5}}).resolve_seed(9) == 9
    monkeypatch.setenv(SEED_ENV, "x")
    with pytest.raises(ValidationError):
        sc.resolve_seed()


def test_scenario_errors_name_the_field(tmp_path):
    with pytest.raises(ValidationError, match="d_table"):
        scenario_from_dict({"A": [[1]], "driver": {"kind": "iid"}})
    with pytest.raises(ValidationError, match="unknown kind"):
        scenario_from_dict({**ALL_ONES, "driver": {"kind": "levy"}})
    p = write(tmp_path, "bad.json", {**ALL_ONES, "A": [[1, -1], [1, 1]]})
    with pytest.raises(ValidationError, match="bad.json"):
        load_scenario(p)
    (tmp_path / "broken.json").write_text("{")
    with pytest.raises(ValidationError, match="cannot read"):
        load_scenario(tmp_path / "broken.json")


def test_estimate_bundle(tmp_path, capsys):
    sc = write(tmp_path, "ones.json", ALL_ONES)
    out, series = tmp_path / "out.json", tmp_path / "series.csv"
    code = main(["estimate", str(sc), "--seed", "3", "--n", "20000", "--num-paths", "10",
                 "--out", str(out), "--csv", str(series)])
    assert code == 0
    b = json.loads(out.read_text())
    assert b["command"] == "estimate" and b["seed"] == 3
    assert b["scenario"]["d_table"] == ALL_ONES["d_table"]
    est = b["results"]["estimate"]
    assert abs(est["value"] - 0.25 * math.log(400)) <= 4 * est["stderr"] + 1e-3
    assert [k["n"] for k in b["results"]["kingman"]] == [1, 2, 4, 8]
    rows = list(csv.reader(series.open()))
    assert rows[0] == ["n", "lambda_hat"] and rows[-1][0] == "20000"
    assert float(rows[-1][1]) == pytest.approx(est["value"], rel=1e-12)


def test_estimate_vector_mode_gate(tmp_path, capsys):
    sc = write(tmp_path, "perm.json", {**ALL_ONES, "A": [[0, 1], [1, 0]]})
    assert main(["estimate", str(sc), "--mode", "vector", "--n", "100"]) == 2
    assert "--mode matrix" in capsys.readouterr().err


def test_not_ergodic_is_invalid_input(tmp_path, capsys):
    sc = write(tmp_path, "m.json", {"A": [[1]], "driver": {"kind": "markov", "P": [[0, 1], [1, 0]]},
                                    "d_table": [[1], [2]]})
    assert main(["theorem", str(sc)]) == 2
    assert "aperiodicity" in capsys.readouterr().err


def test_theorem_and_repeatability(tmp_path, capsys):
    sc = write(tmp_path, "ones.json", ALL_ONES)
    assert main(["theorem", str(sc), "--budget", "20000", "--seed", "1"]) == 0
    first = capsys.readouterr().out
    assert main(["theorem", str(sc), "--budget", "20000", "--seed", "1"]) == 0
    second = capsys.readouterr().out
    assert strip_timing(first) == strip_timing(second)
    assert strip_timing(first)["results"]["theorem"]["verdict"] == "holds"


def test_theorem_general_route(tmp_path, capsys):
    sc = write(tmp_path, "perm.json", {**ALL_ONES, "A": [[0, 1], [1, 0]]})
    assert main(["theorem", str(sc), "--budget", "20000", "--epsilons", "0.1,0.01"]) == 0
    rep = json.loads(capsys.readouterr().out)["results"]["theorem"]
    assert rep["routes"]["epsilon_value"] == 0.01 and rep["agreement"] is True


def test_proof_trace_command(tmp_path, capsys):
    sc = write(tmp_path, "ones.json", ALL_ONES)
    trace = tmp_path / "trace.csv"
    assert main(["proof-trace", str(sc), "--n", "300", "--csv", str(trace)]) == 0
    b = json.loads(capsys.readouterr().out)
    assert b["results"]["report"]["failures"] == []
    assert trace.read_text().splitlines()[0] == "k,i,w_i,rho,d_i"
    perm = write(tmp_path, "perm.json", {**ALL_ONES, "A": [[0, 1], [1, 0]]})
    assert main(["proof-trace", str(perm), "--n", "10"]) == 2


def test_suite_jobs_identical(tmp_path):
    for f in sorted(PACK.glob("*.json"))[:6]:
        shutil.copy(f, tmp_path)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["suite", str(tmp_path), "--budget", "5000", "--out", str(a)]) == 0
    assert main(["suite", str(tmp_path), "--budget", "5000", "--jobs", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.DictReader(a.open()))
    assert [r["scenario_id"] for r in rows] == sorted(p.stem for p in tmp_path.glob("[0-9]*.json"))


def test_suite_empty_and_error_rows(tmp_path):
    assert main(["suite", str(tmp_path)]) == 2
    write(tmp_path, "x.json", {"A": [[1]]})
    assert main(["suite", str(tmp_path), "--out", str(tmp_path / "o.csv")]) == 2
    assert "error" in (tmp_path / "o.csv").read_text()


def test_failed_run_leaves_no_partial_file(tmp_path):
    sc = write(tmp_path, "perm.json", {**ALL_ONES, "A": [[0, 1], [1, 0]]})
    out = tmp_path / "never.json"
    assert main(["estimate", str(sc), "--mode", "vector", "--out", str(out)]) == 2
    assert not out.exists()
    assert [p.name for p in tmp_path.iterdir()] == ["perm.json"]


def test_atomic_write_replaces_whole_file(tmp_path):
    from rmslyap.cli import atomic_write

    target = tmp_path / "x.txt"
    target.write_text("old content that is longer")
    atomic_write(target, "new")
    assert target.read_text() == "new"
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]
