import json
import subprocess
import sys
from pathlib import Path

import pytest

from krc.cli import main, run

SAMPLES = Path(__file__).resolve().parent.parent / "samples"
TWO = str(SAMPLES / "two_point.json")
UNTIGHT = str(SAMPLES / "untight.json")


def report(argv, capsys):
    rep, code = run([*argv, "--json"])
    out = capsys.readouterr().out
    return json.loads(out) if out else None, code


def test_validate(capsys):
    rep, code = report(["validate", TWO], capsys)
    assert code == 0 and rep["results"]["tight"] is True
    rep, code = report(["validate", UNTIGHT], capsys)
    assert code == 1
    assert rep["results"]["tight"] is False
    assert rep["results"]["worst_pair"] == ["x", "z"]
    assert rep["results"]["worst_gap"] == 3.0


def test_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"labels": ["a",\n  "b"')
    assert main(["validate", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_field_addressed_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"labels": ["a", "b"], "measures": {"mu": [0.7, 0.2]}}))
    assert main(["validate", str(bad)]) == 2
    assert "measures.mu" in capsys.readouterr().err
    bad.write_text(json.dumps({"labels": ["a", "b"], "joints": {"J": {"omega_labels": ["w"], "table": [[1]]}}}))
    assert main(["validate", str(bad)]) == 2
    assert "joints.J.table" in capsys.readouterr().err


def test_ot_two_point(capsys):
    rep, code = report(["ot", TWO, "--mu", "mu", "--nu", "nu", "--dual"], capsys)
    assert code == 0
    assert rep["results"]["value"] == pytest.approx(0.3, abs=1e-12)
    assert rep["results"]["potential"] == [1.0, 0.0]
    assert abs(rep["results"]["certificates"]["duality_gap"]) <= 1e-9


def test_ot_identical(capsys):
    rep, code = report(["ot", TWO, "--mu", "mu", "--nu", "mu"], capsys)
    assert code == 0 and rep["results"]["value"] == 0.0


def test_ot_families(capsys):
    rep, code = report(["ot", TWO, "--mu", "A", "--nu", "B", "--dual"], capsys)
    assert code == 0
    assert rep["results"]["value"] == pytest.approx(0.5)
    assert rep["results"]["integrand"] == [[1.0, 0.0], [0.0, 1.0]]


def test_ot_untight_and_closure(capsys):
    assert main(["ot", UNTIGHT, "--mu", "mu", "--nu", "nu"]) == 1
    assert "UntightCost" in capsys.readouterr().err
    rep, code = report(["ot", UNTIGHT, "--mu", "mu", "--nu", "nu", "--closure"], capsys)
    assert code == 0 and rep["results"]["value"] == 2.0


def test_ot_unknown_measure(capsys):
    assert main(["ot", TWO, "--mu", "mu", "--nu", "nope"]) == 2


@pytest.mark.parametrize("joint, value", [("product", 0.0), ("diagonal", 0.5), ("mixed", 0.2)])
def test_tau(joint, value, capsys):
    rep, code = report(["tau", TWO, "--joint", joint, "--beta", "--bound", "0"], capsys)
    assert code == 0
    res = rep["results"]
    assert res["tau_c"] == pytest.approx(value, abs=1e-12)
    assert res["beta"] == pytest.approx(value, abs=1e-12)
    assert res["mp_bound"]["holds"] is True


def test_tau_best_x0(capsys):
    rep, code = report(["tau", TWO, "--joint", "diagonal", "--best-x0"], capsys)
    assert code == 0 and rep["results"]["mp_bound"]["bound"] == 1.0


def test_bare_joint_file(capsys):
    rep, code = report(["tau", str(SAMPLES / "bare_joint.json"), "--beta"], capsys)
    assert code == 0 and rep["results"]["tau_c"] == 0.5


def test_reconstruct(tmp_path, capsys):
    csv1, csv2 = tmp_path / "a.csv", tmp_path / "b.csv"
    rep, code = report(["reconstruct", TWO, "--joint", "diagonal", "--sample", "2000", "--seed", "5",
                        "--csv", str(csv1), "--tensor", str(tmp_path / "t.json")], capsys)
    assert code == 0
    assert rep["results"]["expected_cost"] == pytest.approx(0.5)
    assert rep["results"]["certificates"]["independence_deviation"] <= 1e-9
    report(["reconstruct", TWO, "--joint", "diagonal", "--sample", "2000", "--seed", "5", "--csv", str(csv2)], capsys)
    assert csv1.read_bytes() == csv2.read_bytes()
    tensor = json.loads((tmp_path / "t.json").read_text())
    assert len(tensor["tensor"]) == 2

    rep, code = report(["reconstruct", TWO, "--joint", "product"], capsys)
    assert code == 0 and rep["results"]["expected_cost"] == 0.0


def test_chain(capsys):
    rep, code = report(["chain", TWO, "--chain", "symmetric", "--steps", "6"], capsys)
    assert code == 0
    assert rep["results"]["tau"] == pytest.approx([0.5 * 0.5**k for k in range(1, 7)], abs=1e-12)
    rep, _ = report(["chain", TWO, "--chain", "identity", "--steps", "4"], capsys)
    assert len(set(rep["results"]["tau"])) == 1
    rep, _ = report(["chain", TWO, "--chain", "rank_one", "--steps", "4"], capsys)
    assert rep["results"]["tau"] == pytest.approx([0.0] * 4, abs=1e-15)


def test_json_round_trip_and_reproducible_results(capsys):
    argv = ["tau", TWO, "--joint", "mixed", "--beta", "--bound", "1", "--json"]
    _, _ = run(argv)
    first = capsys.readouterr().out
    _, _ = run(argv)
    second = capsys.readouterr().out
    a, b = json.loads(first), json.loads(second)
    assert json.loads(json.dumps(a)) == a
    a.pop("wall_time"), b.pop("wall_time")
    assert a == b


def test_text_output(capsys):
    assert main(["ot", TWO, "--mu", "mu", "--nu", "nu"]) == 0
    out = capsys.readouterr().out
    assert "value: 0.3" in out and "status: ok" in out


def test_console_script_module():
    proc = subprocess.run([sys.executable, "-m", "krc", "validate", UNTIGHT], capture_output=True, text=True)
    assert proc.returncode == 1
    assert "tight: False" in proc.stdout
