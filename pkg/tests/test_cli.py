import json

import pytest

from wftas import cli


def run_cli(capsys, *argv):
    rc = cli.main(list(argv))
    out = capsys.readouterr()
    return rc, out.out


def test_check(capsys):
    rc, out = run_cli(capsys, "check")
    assert rc == 0
    assert out.count("PASS") == 4
    assert "FAIL" not in out


def test_check_json(capsys):
    rc, out = run_cli(capsys, "check", "--json")
    assert rc == 0
    payload = json.loads(out[out.index("{"):])
    assert len(payload["cells"]) == 98
    assert len(payload["unreachable"]) == 23
    assert payload["cells"]["rst,rst"] == {
        "letters": "d", "expected_accesses": "10"
    }


def test_expect_verify(capsys):
    rc, out = run_cli(capsys, "expect", "--verify")
    assert rc == 0
    assert "max expected accesses: 11" in out


def test_expect_policy(capsys):
    rc, out = run_cli(capsys, "expect", "--policy")
    assert rc == 0
    payload = json.loads(out[out.index("{"):])
    assert len(payload) == 98
    assert set(payload.values()) <= {0, 1}


def test_simulate_stdout_then_lint(capsys, monkeypatch, tmp_path):
    rc, out = run_cli(capsys, "simulate", "--ops", "30",
                      "--adversary", "random", "--seed", "7")
    assert rc == 0
    trace_file = tmp_path / "t.jsonl"
    trace_file.write_text(out)
    rc, out = run_cli(capsys, "lint-trace", str(trace_file))
    assert rc == 0
    assert out.startswith("linearizable")


def test_simulate_files_and_stats(capsys, tmp_path):
    tf, sf = tmp_path / "t.jsonl", tmp_path / "s.csv"
    rc, out = run_cli(capsys, "simulate", "--ops", "20", "--seed", "3",
                      "--trace", str(tf), "--stats", str(sf))
    assert rc == 0
    header = sf.read_text().splitlines()[0]
    assert header == "op_index,pid,kind,accesses,ret,choose_visits"
    assert tf.read_text().strip()


def test_simulate_determinism(capsys):
    _, out1 = run_cli(capsys, "simulate", "--ops", "40",
                      "--adversary", "optimal", "--seed", "9")
    _, out2 = run_cli(capsys, "simulate", "--ops", "40",
                      "--adversary", "optimal", "--seed", "9")
    assert out1 == out2


def test_script_adversary(capsys, tmp_path):
    sfile = tmp_path / "sched.txt"
    sfile.write_text("0 0 0\n")
    rc, out = run_cli(capsys, "simulate", "--ops", "1",
                      "--adversary", f"script:{sfile}", "--seed", "0")
    assert rc == 0
    assert len(out.strip().splitlines()) == 3


def test_unknown_adversary(capsys):
    rc, _ = run_cli(capsys, "simulate", "--ops", "1", "--adversary", "bogus")
    assert rc == 3


def test_lint_trace_corrupt(capsys, tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"nonsense": true}\n')
    rc, out = run_cli(capsys, "lint-trace", str(bad))
    assert rc == 3
    assert out.startswith("corrupt trace")


def test_lint_trace_violation(capsys, tmp_path):
    import dataclasses

    from wftas import harness
    from wftas.core import Event, Trace

    trace, _, _ = harness.run(harness.Workload((5, 5)),
                              harness.round_robin(), seed=1)
    accesses = []
    forged = False
    for a in trace:
        if not forged and any(e.kind == "fTas0" for e in a.events):
            a = dataclasses.replace(
                a,
                events=tuple(
                    Event("fTas1", e.pid) if e.kind == "fTas0" else e
                    for e in a.events
                ),
            )
            forged = True
        accesses.append(a)
    f = tmp_path / "v.jsonl"
    with f.open("w") as fh:
        Trace(accesses).dump_jsonl(fh)
    rc, out = run_cli(capsys, "lint-trace", str(f))
    assert rc == 2
    assert "shortest rejected prefix" in out


def test_tournament_n3(capsys):
    rc, out = run_cli(capsys, "tournament", "--n", "3", "--budget", "10")
    assert rc == 0
    assert "non-linearizable history found" in out
    assert "all per-node projections linearizable: True" in out


def test_tournament_n2(capsys):
    rc, out = run_cli(capsys, "tournament", "--n", "2", "--budget", "50")
    assert rc == 1
    assert out.startswith("no violation")


def test_dump_fa3(capsys):
    rc, out = run_cli(capsys, "dump-fa3")
    assert rc == 0
    payload = json.loads(out)
    assert len(payload["states"]) == 20
