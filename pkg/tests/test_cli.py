"""Command-line interface: contracts, round trips, exit codes."""

from __future__ import annotations

import json

import pytest

from a2aplan.cli import EXIT_OK, EXIT_VALIDATION, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_plan_worked_example(capsys):
    code, out, _ = run(capsys, "plan", "--n", "8", "--k", "1", "--R", "7T", "--summary")
    assert code == EXIT_OK
    obj = json.loads(out)
    assert obj["chosenD"] == 2
    assert obj["totalT"] == pytest.approx(30.0)
    assert obj["powerSumUnits"] == 16


def test_plan_r_in_t_flag_equivalent(capsys):
    code, out, _ = run(capsys, "plan", "--n", "8", "--R", "7", "--R-in-T", "--summary")
    assert code == EXIT_OK
    assert json.loads(out)["chosenD"] == 2


def test_lower_bound_rows(capsys):
    code, out, _ = run(capsys, "lower-bound", "--n", "8")
    assert code == EXIT_OK
    rows = {int(r.split(",")[1]): r.split(",") for r in out.strip().splitlines()[1:]}
    assert int(rows[1][3]) == 28
    assert int(rows[2][3]) == 16
    assert int(rows[7][3]) == 7


def test_gen_traffic_deterministic(tmp_path, capsys):
    f1, f2 = tmp_path / "a.json", tmp_path / "b.json"
    for f in (f1, f2):
        code, *_ = run(capsys, "gen-traffic", "--n", "8", "--kind", "zipf",
                       "--mean-chunks", "4", "--seed", "3", "-o", str(f))
        assert code == EXIT_OK
    assert f1.read_text() == f2.read_text()


@pytest.mark.parametrize("kind", ["uniform", "random", "zipf"])
@pytest.mark.parametrize("n,k,extra", [
    (8, 1, ()),
    (8, 2, ()),
    (16, 1, ()),
    (16, 2, ()),
    (32, 1, ("--d", "2")),
    (32, 2, ("--d", "2")),
    (64, 1, ("--d", "2", "--no-relabel")),
    (64, 2, ("--d", "2", "--no-relabel")),
])
def test_round_trip_pipeline(tmp_path, capsys, n, k, kind, extra):
    t = tmp_path / "t.json"
    s = tmp_path / "s.json"
    code, *_ = run(capsys, "gen-traffic", "--n", str(n), "--kind", kind,
                   "--mean-chunks", "3", "-o", str(t))
    assert code == EXIT_OK
    code, out, _ = run(capsys, "plan", "--n", str(n), "--k", str(k),
                       "--traffic", str(t), "--R", "1e-5", *extra, "-o", str(s))
    assert code == EXIT_OK
    assert json.loads(out)["powerSumUnits"] > 0
    code, out, _ = run(capsys, "verify", "--strategy", str(s), "--traffic", str(t))
    assert code == EXIT_OK
    assert json.loads(out)["ok"]
    code, out, _ = run(capsys, "simulate", "--strategy", str(s), "--traffic", str(t),
                       "--R", "1e-5")
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["demandMatched"] and not rep["violations"]
    assert rep["totalSeconds"] == rep["modelTotalSeconds"]


def test_verify_tampered_names_pair(tmp_path, capsys):
    t = tmp_path / "t.json"
    s = tmp_path / "s.json"
    run(capsys, "gen-traffic", "--n", "8", "-o", str(t))
    run(capsys, "plan", "--n", "8", "--traffic", str(t), "-o", str(s))
    obj = json.loads(s.read_text())
    entries = obj["stages"][0]["rounds"][0]["entries"]
    entries.append(dict(entries[0]))  # duplicate one flow
    s.write_text(json.dumps(obj))
    code, _, err = run(capsys, "verify", "--strategy", str(s), "--traffic", str(t))
    assert code == EXIT_VALIDATION
    msg = json.loads(err.strip().splitlines()[-1])
    pair = f"{entries[0]['src']}->{entries[0]['dst']}"
    assert pair in msg["message"]


def test_validation_errors_are_json(capsys):
    code, _, err = run(capsys, "plan", "--n", "8", "--k", "9")
    assert code == EXIT_VALIDATION
    obj = json.loads(err.strip().splitlines()[-1])
    assert obj["error"] == "validation"

    code, _, err = run(capsys, "verify", "--strategy", "/nonexistent.json",
                       "--traffic", "/nonexistent.json")
    assert code == EXIT_VALIDATION


def test_sweep_csv(tmp_path, capsys):
    out_file = tmp_path / "sweep.csv"
    code, *_ = run(capsys, "sweep", "--n", "8", "--k", "1", "--mean-chunks", "2",
                   "--grid", "1e-6", "1e-3", "4", "-o", str(out_file))
    assert code == EXIT_OK
    lines = out_file.read_text().strip().splitlines()
    assert lines[0].startswith("R_seconds,d,family")
    assert len(lines) == 5


def test_baseline_subcommand(tmp_path, capsys):
    t = tmp_path / "t.json"
    s = tmp_path / "s.json"
    run(capsys, "gen-traffic", "--n", "8", "-o", str(t))
    for fam in ("cycle", "direct", "bvn"):
        code, *_ = run(capsys, "baseline", "--n", "8", "--k", "1",
                       "--family", fam, "--traffic", str(t), "-o", str(s))
        assert code == EXIT_OK
        code, *_ = run(capsys, "verify", "--strategy", str(s), "--traffic", str(t))
        assert code == EXIT_OK


def test_simulate_trace(tmp_path, capsys):
    t = tmp_path / "t.json"
    s = tmp_path / "s.json"
    trace = tmp_path / "trace.csv"
    run(capsys, "gen-traffic", "--n", "8", "-o", str(t))
    run(capsys, "plan", "--n", "8", "--traffic", str(t), "-o", str(s))
    code, *_ = run(capsys, "simulate", "--strategy", str(s), "--traffic", str(t),
                   "--trace", str(trace))
    assert code == EXIT_OK
    assert trace.read_text().startswith("stage,round,slot")


def test_reproduce_subset(capsys):
    code, out, _ = run(capsys, "reproduce", "--criteria", "1")
    assert code == EXIT_OK
    assert "[PASS] criterion 1" in out


def test_reproduce_rejects_unknown(capsys):
    code, _, err = run(capsys, "reproduce", "--criteria", "42")
    assert code == EXIT_VALIDATION
