import json

import pytest

from mcf_lab import scenarios
from mcf_lab.experiments import check_expectations, compare, run_scenario
from mcf_lab.model import ScenarioError, serialize_problem


@pytest.mark.parametrize("name", scenarios.BUILTIN)
def test_shipped_files_match_builders(name):
    shipped = json.loads(scenarios.builtin_path(name).read_text())
    assert shipped == json.loads(json.dumps(scenarios.build(name).to_dict()))


@pytest.mark.parametrize("name", scenarios.BUILTIN)
def test_load_builtin(name):
    sc = scenarios.load(name)
    assert sc.name == name
    assert sc.problem == scenarios.build(name).problem


def test_load_bare_problem(tmp_path):
    path = tmp_path / "mine.json"
    path.write_text(json.dumps(serialize_problem(scenarios.build("linear-f").problem)))
    sc = scenarios.load(str(path))
    assert sc.name == "mine" and sc.routes == []


def test_load_errors(tmp_path):
    with pytest.raises(ScenarioError):
        scenarios.load("no-such-scenario")
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    with pytest.raises(ScenarioError):
        scenarios.load(str(bad))
    bad.write_text("{oops")
    with pytest.raises(ScenarioError):
        scenarios.load(str(bad))


def test_write_builtin_roundtrip(tmp_path):
    paths = scenarios.write_builtin(tmp_path)
    assert len(paths) == len(scenarios.BUILTIN)
    for p in paths:
        assert scenarios.from_document(json.loads(p.read_text())).problem == \
            scenarios.build(p.stem).problem


def test_check_expectations_ops():
    q = {"a": 1.0, "b": 2.0, "flag": False, "span": 0.3}
    res = check_expectations([
        {"quantity": "a", "target": 1.001, "tol": 1e-2},
        {"quantity": "b", "op": "le", "target": 1.0},
        {"quantity": "b", "target": {"ref": "a"}, "tol": 1.5},
        {"quantity": "flag", "target": False},
        {"quantity": "span", "target": "nonconstant", "tol": 0.2},
        {"quantity": "missing", "target": 0.0},
    ], q)
    assert [r["ok"] for r in res] == [True, False, True, True, True, False]


def test_run_small_scenario(tmp_path):
    code, summary = run_scenario(scenarios.load("example-4-2"), tmp_path)
    assert code == 0
    assert (tmp_path / "summary.json").exists()
    assert (tmp_path / "residuals.csv").exists()


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        run_scenario(scenarios.load("constants"), d)
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()


def test_compare_constants_all_zero():
    doc = compare(scenarios.load("constants"), ["formula", "hj", "dp"])
    assert all(p["difference"] == 0.0 for p in doc["pairs"])
    assert doc["profile_gap_oracle"] == pytest.approx(0.0, abs=1e-12)


def test_compare_refuses_formula_without_coercivity():
    doc = compare(scenarios.load("example-4-1"), ["formula", "hj"], grid_m=120)
    assert doc["status"]["formula"] == "refused-noncoercive"
    assert doc["pairs"][0]["flag"] == "unavailable"
    assert doc["pointwise_range_hj"] >= 0.2
