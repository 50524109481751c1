#!/usr/bin/env python3
"""Exhibit the failure of the naive tournament-tree composition.

Finds a 3-process schedule whose operation history cannot be linearized
even though every tree node, taken alone, behaves as a correct
two-process test-and-set.  Prints the schedule, the per-node access log,
and the resulting history.
"""

import argparse

from wftas import linearize, tournament


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3, choices=(2, 3, 4))
    ap.add_argument("--budget", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    try:
        rep = tournament.find_violation(n=args.n, budget=args.budget,
                                        seed=args.seed)
    except tournament.BudgetExceeded as exc:
        print(f"no violation: {exc}")
        return 1

    print(f"schedule ({len(rep.schedule)} steps): {list(rep.schedule)}")
    print("\naccess log (t, process, node, role, access):")
    for na in rep.tree.accesses:
        a = na.access
        print(f"  t={na.t:3d} P{na.pid} node {na.node} role {na.role}: "
              f"{a.action}({a.value.value}) {a.pre}->{a.post}")
    print("\noperation history:")
    for r in rep.history:
        print(f"  P{r.pid} {r.kind} [{r.start},{r.finish}] -> {r.ret}")
    print(f"\nwhole history linearizable: {rep.verdict.ok}")
    for v, ok in sorted(rep.node_verdicts.items()):
        nt = rep.tree.node_trace(v)
        lint_ok = linearize.lint(nt).ok if len(nt) else True
        print(f"node {v}: projection linearizable={ok}, lints={lint_ok}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
