"""Worst-case expected access counts under the adaptive adversary.

Solves, over the 98-configuration graph, the maximizing Markov decision
problem "expected number of accesses the tracked process needs to finish
its current (or, when idle, next) operation, against the adversary that
schedules to maximize that number".  Two further quantities share the
same machinery: the maximal probability of the tracked process looping
back through CHOOSE before finishing, and the maximal expected number of
CHOOSE entries per operation.

All results are exact rationals, certified as follows: float value
iteration produces a numeric fixed point; each entry is snapped to a
small rational; the greedy policy of the snapped values is extracted
(ties broken toward scheduling the tracked process, which keeps the
policy proper); the snapped values are then verified to be the exact
fixed point of both the policy's affine operator and the optimal Bellman
operator.  A proper policy has a unique fixed point, so the snapped
values are exactly the optimal values.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from . import protocol
from .checker import Config, Edge, INITIAL_CONFIG, StepFn, edges_from
from .protocol import ProcState

# (reward on taking this branch, branch is absorbing)
BranchFn = Callable[[Edge], tuple[int, bool]]

VI_TOL = 1e-12
VI_CAP = 10_000
SNAP_DENOMINATOR = 1 << 20


class NonConvergence(Exception):
    """Value iteration or exact certification failed — a modeling bug."""


@dataclass(frozen=True)
class SolveResult:
    """Certified exact solution of one maximizing fixed point."""

    values: dict[Config, Fraction]
    policy: dict[Config, int]
    iterations: int

    @property
    def max_value(self) -> Fraction:
        return max(self.values.values())


def edge_map(
    step_fn: StepFn = protocol.step,
) -> dict[Config, tuple[Edge, ...]]:
    """Outgoing scheduled-access branches for every reachable configuration."""
    out: dict[Config, tuple[Edge, ...]] = {}
    frontier = [INITIAL_CONFIG]
    while frontier:
        c = frontier.pop()
        if c in out:
            continue
        edges = tuple(edges_from(c, step_fn))
        out[c] = edges
        for e in edges:
            if e.dst not in out:
                frontier.append(e.dst)
    return out


def _q_value(edges, pid: int, branch_fn: BranchFn, v) -> object:
    """Expected value of scheduling `pid`, under the value estimate v."""
    q = 0
    for e in edges:
        if e.pid != pid:
            continue
        reward, absorbing = branch_fn(e)
        q += e.prob * (reward + (0 if absorbing else v[e.dst]))
    return q


def _value_iteration(
    emap: dict[Config, tuple[Edge, ...]],
    branch_fn: BranchFn,
) -> tuple[dict[Config, float], int]:
    v = {c: 0.0 for c in emap}
    for it in range(VI_CAP):
        delta = 0.0
        for c, edges in emap.items():
            new = max(
                float(_q_value(edges, 0, branch_fn, v)),
                float(_q_value(edges, 1, branch_fn, v)),
            )
            delta = max(delta, abs(new - v[c]))
            v[c] = new
        if delta < VI_TOL:
            return v, it + 1
    raise NonConvergence(f"value iteration did not stabilize in {VI_CAP} sweeps")


def _certify(
    emap: dict[Config, tuple[Edge, ...]],
    branch_fn: BranchFn,
    float_values: dict[Config, float],
    iterations: int,
    tracked: int,
) -> SolveResult:
    values = {
        c: Fraction(x).limit_denominator(SNAP_DENOMINATOR)
        for c, x in float_values.items()
    }
    # Greedy policy; ties go to the tracked process so that the policy
    # keeps making progress toward absorption (a solo process always
    # finishes its operation).
    policy: dict[Config, int] = {}
    for c, edges in emap.items():
        q_tracked = _q_value(edges, tracked, branch_fn, values)
        q_other = _q_value(edges, 1 - tracked, branch_fn, values)
        policy[c] = tracked if q_tracked >= q_other else 1 - tracked
        # Optimal Bellman fixed point, exactly.
        if values[c] != max(q_tracked, q_other):
            raise NonConvergence(
                f"snapped values are not a Bellman fixed point at "
                f"({c[0].value},{c[1].value})"
            )
    # Properness: under the policy some absorbing branch is reachable
    # from every configuration, hence absorption is almost sure and the
    # policy's affine operator has a unique fixed point.
    _policy_properness(emap, branch_fn, policy)
    return SolveResult(values=values, policy=policy, iterations=iterations)


def _policy_properness(emap, branch_fn, policy) -> None:
    for start in emap:
        seen = {start}
        stack = [start]
        live = False
        while stack and not live:
            c = stack.pop()
            for e in emap[c]:
                if e.pid != policy[c]:
                    continue
                if branch_fn(e)[1]:
                    live = True
                    break
                if e.dst not in seen:
                    seen.add(e.dst)
                    stack.append(e.dst)
        if not live:
            raise NonConvergence(
                f"policy is improper from ({start[0].value},{start[1].value})"
            )


def evaluate_policy(
    policy: dict[Config, int],
    branch_fn_for: Callable[[int], BranchFn],
    tracked: int = 0,
    step_fn: StepFn = protocol.step,
) -> SolveResult:
    """Certified exact value of a *fixed* scheduling policy.

    Same pipeline as the optimizing solver, but the policy is given:
    float iteration of the policy's affine operator, rational snap,
    exact fixed-point verification, properness check.
    """
    emap = edge_map(step_fn)
    branch_fn = branch_fn_for(tracked)
    _policy_properness(emap, branch_fn, policy)
    v = {c: 0.0 for c in emap}
    iterations = 0
    for it in range(VI_CAP):
        iterations = it + 1
        delta = 0.0
        for c, edges in emap.items():
            new = float(_q_value(edges, policy[c], branch_fn, v))
            delta = max(delta, abs(new - v[c]))
            v[c] = new
        if delta < VI_TOL:
            break
    else:
        raise NonConvergence(f"policy evaluation did not stabilize in {VI_CAP} sweeps")
    values = {
        c: Fraction(x).limit_denominator(SNAP_DENOMINATOR) for c, x in v.items()
    }
    for c, edges in emap.items():
        if values[c] != _q_value(edges, policy[c], branch_fn, values):
            raise NonConvergence(
                f"snapped policy values are not a fixed point at "
                f"({c[0].value},{c[1].value})"
            )
    return SolveResult(values=values, policy=dict(policy), iterations=iterations)


def _solve_mdp(
    branch_fn_for: Callable[[int], BranchFn],
    tracked: int,
    step_fn: StepFn,
) -> SolveResult:
    emap = edge_map(step_fn)
    branch_fn = branch_fn_for(tracked)
    float_values, iterations = _value_iteration(emap, branch_fn)
    return _certify(emap, branch_fn, float_values, iterations, tracked)


def _access_cost(tracked: int) -> BranchFn:
    def branch(e: Edge) -> tuple[int, bool]:
        if e.pid != tracked:
            return (0, False)
        return (1, e.finishes)

    return branch


def _choose_entry_reward(tracked: int) -> BranchFn:
    def branch(e: Edge) -> tuple[int, bool]:
        if e.pid != tracked:
            return (0, False)
        if e.dst[tracked] is ProcState.CHOOSE:
            return (1, True)  # success: absorbed with reward 1
        return (0, e.finishes)

    return branch


def _choose_visit_cost(tracked: int) -> BranchFn:
    def branch(e: Edge) -> tuple[int, bool]:
        if e.pid != tracked:
            return (0, False)
        return (1 if e.dst[tracked] is ProcState.CHOOSE else 0, e.finishes)

    return branch


def solve(
    tracked: int = 0,
    step_fn: StepFn = protocol.step,
) -> SolveResult:
    """Worst-case expected remaining accesses of the tracked process.

    For every reachable configuration: the expected number of accesses
    the tracked process performs until its current operation (or, from
    an idle state, the operation it is invoked with next) finishes,
    maximized over adaptive schedules; coin reads average their two
    outcomes with probability 1/2 each.
    """
    return _solve_mdp(_access_cost, tracked, step_fn)


def optimal_adversary(
    tracked: int = 0,
    step_fn: StepFn = protocol.step,
) -> dict[Config, int]:
    """Deterministic configuration-indexed schedule attaining solve()."""
    return solve(tracked, step_fn).policy


def loop_probabilities(
    tracked: int = 0,
    step_fn: StepFn = protocol.step,
) -> SolveResult:
    """Maximal probability that the tracked process enters CHOOSE before
    its current operation finishes."""
    return _solve_mdp(_choose_entry_reward, tracked, step_fn)


def expected_choose_visits(
    tracked: int = 0,
    step_fn: StepFn = protocol.step,
) -> SolveResult:
    """Maximal expected number of CHOOSE entries before the tracked
    process finishes its current operation."""
    return _solve_mdp(_choose_visit_cost, tracked, step_fn)


def one_step_consistency(result: Optional[SolveResult] = None) -> list[str]:
    """The decrement argument: scheduling the tracked process never pays
    more than the current value predicts, with equality when the optimal
    adversary schedules it."""
    if result is None:
        result = solve(0)
    problems: list[str] = []
    emap = edge_map()
    branch_fn = _access_cost(0)
    for c, edges in emap.items():
        q = _q_value(edges, 0, branch_fn, result.values)
        if q > result.values[c]:
            problems.append(
                f"({c[0].value},{c[1].value}): tracked step pays {q} > "
                f"value {result.values[c]}"
            )
        if result.policy[c] == 0 and q != result.values[c]:
            problems.append(
                f"({c[0].value},{c[1].value}): optimal tracked step pays "
                f"{q} != value {result.values[c]}"
            )
    return problems


def loop_probability_check(tracked: int = 0) -> list[str]:
    """Analytic loop geometry: the return-to-CHOOSE probability is at
    most 1/2 from every configuration with the tracked process in
    CHOOSE (exactly 1/2 at (choose,choose), 0 at (choose,rst)), and the
    expected number of CHOOSE entries per operation is at most 2."""
    problems: list[str] = []
    loops = loop_probabilities(tracked)
    half = Fraction(1, 2)
    for c, p in loops.values.items():
        if c[tracked] is ProcState.CHOOSE and p > half:
            problems.append(
                f"({c[0].value},{c[1].value}): return probability {p} > 1/2"
            )
    both_choose = (ProcState.CHOOSE, ProcState.CHOOSE)
    if loops.values[both_choose] != half:
        problems.append(
            f"(choose,choose): return probability {loops.values[both_choose]} != 1/2"
        )
    solo = (
        (ProcState.CHOOSE, ProcState.RST)
        if tracked == 0
        else (ProcState.RST, ProcState.CHOOSE)
    )
    if loops.values[solo] != 0:
        problems.append(
            f"(choose,rst): return probability {loops.values[solo]} != 0"
        )
    visits = expected_choose_visits(tracked)
    worst = visits.max_value
    if worst > 2:
        problems.append(f"expected CHOOSE visits {worst} > 2")
    return problems


def verify_values(table=None, tracked: int = 0) -> list[str]:
    """Diff solve() against the golden table's expected-access numbers."""
    from .goldens import load_golden_table

    if table is None:
        table = load_golden_table()
    result = solve(tracked)
    problems: list[str] = []
    for c, v in result.values.items():
        key = (c[tracked].value, c[1 - tracked].value)
        cell = table.cells.get(key)
        if cell is None:
            problems.append(f"cell {key}: reachable but '*' in table")
            continue
        if v != cell.expected:
            problems.append(f"cell {key}: computed {v} != table {cell.expected}")
    for key in table.reachable_cells():
        c = (ProcState(key[0]), ProcState(key[1]))
        cfg = c if tracked == 0 else (c[1], c[0])
        if cfg not in result.values:
            problems.append(f"cell {key}: in table but not reachable")
    return problems
