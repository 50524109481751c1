"""Adversary strategies and the randomized simulation engine.

Drives two protocol instances against a scheduler, producing traces,
operation records and statistics.  One run is deterministic given
(workload, adversary, seed): all coins come from one seeded generator,
and every coin outcome is recorded in the trace, so replay never needs
the generator.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from . import core, expectation, protocol
from .checker import Config
from .core import Access, OpRecord, RegValue, Trace
from .protocol import GROUP, IDLE_OP, IDLE_STATES, ProcState

# An adversary sees the full visible history (accesses so far, current
# chart states) and the schedulable pids, and picks one of them.
Adversary = Callable[[Sequence[Access], Config, tuple[int, ...]], int]

DEFAULT_MAX_STEPS = 10**6


class ScriptExhausted(Exception):
    """A scripted adversary ran out of scheduling decisions."""


@dataclass(frozen=True)
class Workload:
    """Per-process operation budget.

    Each process performs `tas_ops[pid]` test-and-set operations; a
    process that wins (returns 0) always resets immediately afterwards,
    and resets do not count against the budget.
    """

    tas_ops: tuple[int, int] = (1, 1)


@dataclass
class RunStats:
    """Aggregate statistics of one run."""

    # One row per finished op: (op_index, pid, kind, accesses, ret, choose_visits)
    per_op: list[tuple[int, int, str, int, Optional[int], int]] = field(
        default_factory=list
    )
    returns: dict[int, int] = field(default_factory=dict)
    mean_tas_accesses: float = 0.0
    max_tas_accesses: int = 0
    resets_all_one_access: bool = True
    choose_histogram: dict[int, int] = field(default_factory=dict)
    # Loop continuation: of all CHOOSE visits, how many were followed by
    # another CHOOSE visit within the same operation.
    loop_continuations: int = 0
    choose_visits: int = 0
    truncated: bool = False

    @property
    def loop_frequency(self) -> float:
        return self.loop_continuations / self.choose_visits if self.choose_visits else 0.0

    @staticmethod
    def from_records(records: Sequence[OpRecord], truncated: bool = False) -> "RunStats":
        st = RunStats(truncated=truncated)
        tas_counts: list[int] = []
        for i, r in enumerate(records):
            st.per_op.append(
                (i, r.pid, r.kind, r.accesses, r.ret, r.choose_visits)
            )
            if not r.finished:
                continue
            if r.kind == "reset":
                if r.accesses != 1:
                    st.resets_all_one_access = False
                continue
            tas_counts.append(r.accesses)
            st.returns[r.ret] = st.returns.get(r.ret, 0) + 1
            st.choose_histogram[r.choose_visits] = (
                st.choose_histogram.get(r.choose_visits, 0) + 1
            )
            st.choose_visits += r.choose_visits
            st.loop_continuations += max(r.choose_visits - 1, 0)
        if tas_counts:
            st.mean_tas_accesses = sum(tas_counts) / len(tas_counts)
            st.max_tas_accesses = max(tas_counts)
        return st


class _Engine:
    """Mutable two-process system: chart states, registers, coin source."""

    def __init__(self, rng: random.Random, config: Config = (ProcState.RST, ProcState.RST)):
        self.rng = rng
        self.states: list[ProcState] = list(config)
        self.regs = core.Registers(GROUP[config[0]], GROUP[config[1]])
        self.op_seq = [-1, -1]
        self.mid_op: list[Optional[str]] = [None, None]
        self.t = 0

    @property
    def config(self) -> Config:
        return (self.states[0], self.states[1])

    def step_pid(self, pid: int) -> Access:
        """Execute one access of `pid`, invoking its next op if idle."""
        s = self.states[pid]
        if self.mid_op[pid] is None:
            self.op_seq[pid] += 1
            self.mid_op[pid] = IDLE_OP[s]
        kind = protocol.enabled_access(s)
        if kind[0] == "w":
            value = kind[1]
            post = protocol.step(s)
            action, reg, coin = "w", pid, None
            self.regs.write(pid, value)
        else:
            value = self.regs.read(pid)
            coin = self.rng.random() < 0.5 if protocol.needs_coin(s, value) else None
            post = protocol.step(s, value, coin)
            action, reg = "r", 1 - pid
        a = Access(
            t=self.t,
            pid=pid,
            reg=reg,
            action=action,
            value=value,
            coin=coin,
            pre=s.value,
            post=post.value,
            events=protocol.classify(s, post, pid),
            op_seq=self.op_seq[pid],
            op=self.mid_op[pid],
        )
        self.t += 1
        self.states[pid] = post
        if protocol.finishes_op(s, post):
            self.mid_op[pid] = None
        return a


def run(
    workload: Workload,
    adversary: Adversary,
    seed: int,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> tuple[Trace, list[OpRecord], RunStats]:
    """Simulate until the workload finishes or max_steps elapse."""
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")
    eng = _Engine(random.Random(seed))
    remaining = list(workload.tas_ops)
    trace = Trace()
    truncated = False
    while True:
        schedulable = []
        for pid in (0, 1):
            s = eng.states[pid]
            if eng.mid_op[pid] is not None:
                schedulable.append(pid)
            elif IDLE_OP[s] == "reset":
                schedulable.append(pid)  # a pending reset is mandatory
            elif remaining[pid] > 0:
                schedulable.append(pid)
        if not schedulable:
            break
        if eng.t >= max_steps:
            truncated = True
            break
        pid = adversary(trace.accesses, eng.config, tuple(schedulable))
        if pid not in schedulable:
            raise ValueError(f"adversary scheduled unschedulable P{pid}")
        invoking = eng.mid_op[pid] is None and IDLE_OP[eng.states[pid]] == "tas"
        if invoking:
            remaining[pid] -= 1
        trace.append(eng.step_pid(pid))
    records = trace.op_records()
    return trace, records, RunStats.from_records(records, truncated)


def round_robin() -> Adversary:
    """Alternate between the processes, skipping unschedulable ones."""
    last = [1]

    def choose(accesses, config, schedulable):
        pid = 1 - last[0]
        if pid not in schedulable:
            pid = schedulable[0]
        last[0] = pid
        return pid

    return choose


def random_adversary(seed: int) -> Adversary:
    rng = random.Random(seed)

    def choose(accesses, config, schedulable):
        return rng.choice(sorted(schedulable))

    return choose


def script(pids: Sequence[int]) -> Adversary:
    """Replay a fixed schedule; raises ScriptExhausted when it ends."""
    it = iter(pids)

    def choose(accesses, config, schedulable):
        try:
            pid = next(it)
        except StopIteration:
            raise ScriptExhausted("scheduling script exhausted") from None
        if pid not in schedulable:
            raise ScriptExhausted(f"script scheduled unschedulable P{pid}")
        return pid

    return choose


def optimal(tracked: int = 0, policy: Optional[dict[Config, int]] = None) -> Adversary:
    """The access-count-maximizing policy from the expectation solver,
    falling back to any schedulable process when its pick is exhausted."""
    if policy is None:
        policy = expectation.optimal_adversary(tracked)

    def choose(accesses, config, schedulable):
        pid = policy.get(config)
        if pid is None or pid not in schedulable:
            pid = schedulable[0]
        return pid

    return choose


def builtin_adversaries(seed: int, tracked: int = 0) -> dict[str, Adversary]:
    return {
        "round-robin": round_robin(),
        "random": random_adversary(seed),
        "optimal": optimal(tracked),
    }


def measure_from_config(
    config: Config,
    n_ops: int,
    seed: int,
    tracked: int = 0,
    policy: Optional[dict[Config, int]] = None,
) -> list[int]:
    """Access counts of n_ops tracked operations, each started fresh from
    `config` and scheduled by the worst-case policy.

    Used for the Monte Carlo check of the expectation table: the mean of
    the returned counts estimates the solved value at `config`.
    """
    if policy is None:
        policy = expectation.optimal_adversary(tracked)
    rng = random.Random(seed)
    counts: list[int] = []
    for _ in range(n_ops):
        eng = _Engine(rng, config)
        accesses = 0
        while True:
            pid = policy[eng.config]
            pre = eng.states[pid]
            a = eng.step_pid(pid)
            if pid == tracked:
                accesses += 1
                if protocol.finishes_op(pre, eng.states[pid]):
                    break
        counts.append(accesses)
    return counts


@dataclass
class LoopExperiment:
    """Per-visit outcomes of the CHOOSE-loop Monte Carlo experiment.

    Each trial is one CHOOSE entry of the tracked process; `probs[i]` is
    the analytic return probability from the configuration at that entry
    and `successes[i]` whether the process entered CHOOSE again before
    its operation finished.
    """

    probs: list[Fraction] = field(default_factory=list)
    successes: list[bool] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.probs)

    @property
    def empirical_frequency(self) -> float:
        return sum(self.successes) / self.n if self.n else 0.0

    @property
    def analytic_frequency(self) -> float:
        return float(sum(self.probs) / self.n) if self.n else 0.0

    @property
    def sigma(self) -> float:
        """Standard deviation of the empirical frequency if the analytic
        per-visit probabilities are correct (Poisson binomial)."""
        if not self.n:
            return 0.0
        var = sum(float(p) * (1.0 - float(p)) for p in self.probs)
        return var**0.5 / self.n

    @property
    def within_3_sigma(self) -> bool:
        return abs(self.empirical_frequency - self.analytic_frequency) <= 3 * self.sigma


def loop_experiment(
    min_visits: int,
    seed: int,
    tracked: int = 0,
    max_steps: int = 100 * DEFAULT_MAX_STEPS,
) -> LoopExperiment:
    """Run until `min_visits` CHOOSE entries of the tracked process have
    been resolved (returned to CHOOSE or finished the operation).

    The schedule is the visit-maximizing policy, which keeps the system
    looping through (choose,choose); the analytic per-visit probability
    is that policy's certified exact return probability from the entry
    configuration.
    """
    sigma = expectation.expected_choose_visits(tracked).policy
    lp = expectation.evaluate_policy(
        sigma, expectation._choose_entry_reward, tracked
    )
    eng = _Engine(random.Random(seed))
    exp = LoopExperiment()
    pending: Optional[Fraction] = None
    while exp.n < min_visits:
        if eng.t >= max_steps:
            raise RuntimeError("loop experiment exceeded its step budget")
        pid = lp.policy[eng.config]
        pre = eng.states[pid]
        eng.step_pid(pid)
        if pid != tracked:
            continue
        post = eng.states[pid]
        if post is ProcState.CHOOSE:
            if pending is not None:
                exp.probs.append(pending)
                exp.successes.append(True)
            pending = lp.values[eng.config]
        elif protocol.finishes_op(pre, post) and pending is not None:
            exp.probs.append(pending)
            exp.successes.append(False)
            pending = None
    return exp
