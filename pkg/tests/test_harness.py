import pytest

from wftas import harness, linearize
from wftas.harness import ScriptExhausted, Workload
from wftas.protocol import ProcState as S


def test_solo_run_three_accesses():
    trace, records, stats = harness.run(
        Workload((1, 0)), harness.round_robin(), seed=0
    )
    assert [(a.action, a.value.value) for a in trace] == [
        ("w", "me"), ("r", "rst"), ("w", "rst")
    ]
    assert [r.kind for r in records] == ["tas", "reset"]
    assert records[0].ret == 0


def test_determinism():
    for name in ("round-robin", "random", "optimal"):
        t1, _, s1 = harness.run(
            Workload((10, 10)), harness.builtin_adversaries(5)[name], seed=5
        )
        t2, _, s2 = harness.run(
            Workload((10, 10)), harness.builtin_adversaries(5)[name], seed=5
        )
        assert t1.accesses == t2.accesses
        assert s1.per_op == s2.per_op


def test_resets_always_one_access():
    for seed in range(5):
        _, _, stats = harness.run(
            Workload((50, 50)), harness.random_adversary(seed), seed=seed
        )
        assert stats.resets_all_one_access


def test_exclusivity():
    """At no instant do both processes hold an unreset 0."""
    trace, records, _ = harness.run(
        Workload((50, 50)), harness.random_adversary(3), seed=3
    )
    owner = None
    for r in sorted((r for r in records if r.finished), key=lambda r: r.finish):
        if r.kind == "tas" and r.ret == 0:
            assert owner is None
            owner = r.pid
        elif r.kind == "reset":
            assert owner == r.pid
            owner = None


def test_script_reaches_me_me(check_report, rep_sets):
    trace, _, _ = harness.run(
        Workload((1, 1)), harness.script([0, 1]), seed=0, max_steps=2
    )
    # both wrote me: configuration (me, me)
    assert [a.value.value for a in trace] == ["me", "me"]
    letters = check_report.labels.letters_for(rep_sets[(S.ME, S.ME)])
    assert letters == "imoq"


def test_script_exhausted():
    with pytest.raises(ScriptExhausted):
        harness.run(Workload((1, 1)), harness.script([0]), seed=0)


def test_truncation_recorded():
    _, _, stats = harness.run(
        Workload((5, 5)), harness.round_robin(), seed=0, max_steps=3
    )
    assert stats.truncated


def test_traces_linearizable():
    for name, adv in harness.builtin_adversaries(11).items():
        trace, _, _ = harness.run(Workload((25, 25)), adv, seed=11)
        assert linearize.lint(trace).ok, name


def test_measure_from_config_counts():
    counts = harness.measure_from_config((S.TST0, S.RST), 20, seed=0)
    # reset from tst0 is always exactly one access
    assert counts == [1] * 20


def test_loop_experiment_small():
    exp = harness.loop_experiment(min_visits=500, seed=9)
    assert exp.n >= 500
    assert 0 < exp.empirical_frequency < 1
    assert exp.analytic_frequency <= 0.5 + 1e-12
