"""Specification automata for two-process test-and-set.

FA1 is the sequential two-process object (states = owner of the 0-bit).
FA2 is the wait-free single-process interface over the events
sTas / tas0 / tas1 / fTas0 / fTas1 / rstOp.
FA3 is their composition: 20 reachable product states, conventionally
labeled `a` through `t`.
FA4 is FA3 with the internal occurrence events tas0/tas1 turned into
epsilon-moves; nondeterministic sets of FA4 states are kept in a canonical
form that drops states whose outgoing moves are epsilon-moves only.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .core import Event


class Owner(Enum):
    BOT = "bot"
    P0 = "p0"
    P1 = "p1"

    def __repr__(self) -> str:
        return f"Owner.{self.name}"


class Fa2State(Enum):
    I1 = "i1"  # idle, local bit 1
    S = "s"    # after sTas
    T0 = "t0"  # after the tas0 occurrence
    T1 = "t1"  # after the tas1 occurrence
    I0 = "i0"  # idle, holding the 0

    def __repr__(self) -> str:
        return f"Fa2State.{self.name}"


@dataclass(frozen=True)
class Fa3State:
    owner: Owner
    p0: Fa2State
    p1: Fa2State

    def _key(self) -> tuple[str, str, str]:
        return (self.owner.value, self.p0.value, self.p1.value)

    def __lt__(self, other: "Fa3State") -> bool:
        return self._key() < other._key()

    def comp(self, pid: int) -> Fa2State:
        return self.p0 if pid == 0 else self.p1

    def with_comp(self, pid: int, v: Fa2State, owner: Optional[Owner] = None) -> "Fa3State":
        o = self.owner if owner is None else owner
        if pid == 0:
            return Fa3State(o, v, self.p1)
        return Fa3State(o, self.p0, v)

    def mirror(self) -> "Fa3State":
        o = {Owner.BOT: Owner.BOT, Owner.P0: Owner.P1, Owner.P1: Owner.P0}[self.owner]
        return Fa3State(o, self.p1, self.p0)

    def __repr__(self) -> str:
        return f"({self.owner.value},{self.p0.value},{self.p1.value})"


FA3_INITIAL = Fa3State(Owner.BOT, Fa2State.I1, Fa2State.I1)


def _owner_of(pid: int) -> Owner:
    return Owner.P0 if pid == 0 else Owner.P1


def fa3_enabled(s: Fa3State, e: Event) -> Optional[Fa3State]:
    """Successor of FA3 state `s` under event `e`, or None if disabled."""
    pid = e.pid
    me = s.comp(pid)
    if e.kind == "sTas":
        if me is Fa2State.I1:
            return s.with_comp(pid, Fa2State.S)
    elif e.kind == "tas0":
        if s.owner is Owner.BOT and me is Fa2State.S:
            return s.with_comp(pid, Fa2State.T0, owner=_owner_of(pid))
    elif e.kind == "tas1":
        if s.owner is _owner_of(1 - pid) and me is Fa2State.S:
            return s.with_comp(pid, Fa2State.T1)
    elif e.kind == "fTas0":
        if me is Fa2State.T0:
            return s.with_comp(pid, Fa2State.I0)
    elif e.kind == "fTas1":
        if me is Fa2State.T1:
            return s.with_comp(pid, Fa2State.I1)
    elif e.kind == "rstOp":
        if s.owner is _owner_of(pid) and me is Fa2State.I0:
            return s.with_comp(pid, Fa2State.I1, owner=Owner.BOT)
    return None


ALL_EVENTS = tuple(
    Event(kind, pid)
    for kind in ("sTas", "tas0", "tas1", "fTas0", "fTas1", "rstOp")
    for pid in (0, 1)
)
EPS_EVENTS = tuple(e for e in ALL_EVENTS if e.is_eps)
B_EVENTS = tuple(e for e in ALL_EVENTS if not e.is_eps)


class Fa3:
    """The reachable product automaton (FA3) and its FA4 view."""

    def __init__(self) -> None:
        init = FA3_INITIAL
        states: list[Fa3State] = []
        seen = {init}
        frontier = [init]
        moves: dict[tuple[Fa3State, Event], Fa3State] = {}
        while frontier:
            s = frontier.pop()
            states.append(s)
            for e in ALL_EVENTS:
                t = fa3_enabled(s, e)
                if t is None:
                    continue
                moves[(s, e)] = t
                if t not in seen:
                    seen.add(t)
                    frontier.append(t)
        self.initial = init
        self.states = frozenset(states)
        self.moves = moves
        self._eps_succ: dict[Fa3State, tuple[Fa3State, ...]] = {
            s: tuple(
                moves[(s, e)] for e in EPS_EVENTS if (s, e) in moves
            )
            for s in self.states
        }
        self._eps_only = frozenset(
            s
            for s in self.states
            if self._eps_succ[s]
            and all(e.is_eps for (t, e) in moves if t == s)
        )

    # -- FA4 machinery -------------------------------------------------

    def eps_closure(self, S: Iterable[Fa3State]) -> frozenset[Fa3State]:
        out = set(S)
        frontier = list(out)
        while frontier:
            s = frontier.pop()
            for t in self._eps_succ[s]:
                if t not in out:
                    out.add(t)
                    frontier.append(t)
        return frozenset(out)

    def is_eps_only(self, s: Fa3State) -> bool:
        return s in self._eps_only

    def eps_only_states(self) -> frozenset[Fa3State]:
        return self._eps_only

    def canonical(self, S: Iterable[Fa3State]) -> frozenset[Fa3State]:
        """Epsilon-closure minus states with only epsilon-moves out."""
        return frozenset(
            s for s in self.eps_closure(S) if s not in self._eps_only
        )

    def fa4_step(self, S: Iterable[Fa3State], e: Event) -> frozenset[Fa3State]:
        after = {
            self.moves[(s, e)]
            for s in self.eps_closure(S)
            if (s, e) in self.moves
        }
        return self.canonical(after)

    def fa4_initial(self) -> frozenset[Fa3State]:
        return self.canonical({self.initial})

    def fa4_accepts(
        self, events: Iterable[Event]
    ) -> tuple[bool, list[frozenset[Fa3State]]]:
        """All states are accepting: accept iff no prefix empties the set."""
        cur = self.fa4_initial()
        run = [cur]
        for e in events:
            cur = self.fa4_step(cur, e)
            run.append(cur)
            if not cur:
                return (False, run)
        return (True, run)


_FA3_SINGLETON: Optional[Fa3] = None


def fa3_build() -> Fa3:
    global _FA3_SINGLETON
    if _FA3_SINGLETON is None:
        _FA3_SINGLETON = Fa3()
    return _FA3_SINGLETON


# -- Display labels ----------------------------------------------------

LETTERS = "abcdefghijklmnopqrst"

# Letter ranges by owner of the 0-bit.
OWNER_RANGE = {Owner.BOT: set("abcdefgh"), Owner.P1: set("ijklmn"), Owner.P0: set("opqrst")}

# Fixed letter identities, pinned by the worked examples of the
# verification table (initial state d; the (me,rst) set {g,p}; the (me,me)
# set {i,m,o,q}; the epsilon-only state h; the (tst0,rst) singleton s).
ANCHORS: dict[str, Fa3State] = {
    "d": Fa3State(Owner.BOT, Fa2State.I1, Fa2State.I1),
    "g": Fa3State(Owner.BOT, Fa2State.S, Fa2State.I1),
    "h": Fa3State(Owner.BOT, Fa2State.S, Fa2State.S),
    "p": Fa3State(Owner.P0, Fa2State.T0, Fa2State.I1),
    "q": Fa3State(Owner.P0, Fa2State.T0, Fa2State.S),
    "o": Fa3State(Owner.P0, Fa2State.T0, Fa2State.T1),
    "m": Fa3State(Owner.P1, Fa2State.S, Fa2State.T0),
    "i": Fa3State(Owner.P1, Fa2State.T1, Fa2State.T0),
}


class NoConsistentBijection(Exception):
    pass


@dataclass
class LabelAssignment:
    """Letter -> FA3 state mapping plus the unresolved equivalence classes."""

    mapping: dict[str, Fa3State]
    ambiguous: list[tuple[tuple[str, ...], tuple[Fa3State, ...]]]

    def letters_for(self, S: frozenset[Fa3State]) -> str:
        inv = {v: k for k, v in self.mapping.items()}
        missing = [s for s in S if s not in inv]
        if missing:
            raise NoConsistentBijection(f"unlabeled states in set: {missing}")
        return "".join(sorted(inv[s] for s in S))


def assign_labels(
    fa3: Fa3,
    cells: dict, rep_sets: dict,
    anchors: Optional[dict[str, Fa3State]] = None,
) -> LabelAssignment:
    """Solve the letter bijection against the golden table.

    `cells` maps configuration -> set of letters (golden table);
    `rep_sets` maps the same configurations -> computed frozenset of FA3
    states.  A letter appears in a cell iff its state is in the computed
    set, which together with the owner ranges and the anchors determines
    the bijection up to the letters that occur in no cell.
    """
    if anchors is None:
        anchors = ANCHORS
    states = sorted(fa3.states)
    candidates: dict[str, set[Fa3State]] = {
        l: {s for s in states if l in OWNER_RANGE[s.owner]} for l in LETTERS
    }
    for l, s in anchors.items():
        if s not in candidates[l]:
            raise NoConsistentBijection(f"anchor {l} outside its owner range")
        candidates[l] = {s}
    for cfg, letters in cells.items():
        if cfg not in rep_sets:
            raise NoConsistentBijection(f"golden cell {cfg} not reachable")
        S = rep_sets[cfg]
        if len(letters) != len(S):
            raise NoConsistentBijection(
                f"cell {cfg}: {len(letters)} letters vs {len(S)} states"
            )
        for l in LETTERS:
            if l in letters:
                candidates[l] &= S
            else:
                candidates[l] -= S
            if not candidates[l]:
                raise NoConsistentBijection(f"letter {l} eliminated at {cfg}")
    # Propagate singletons.
    changed = True
    while changed:
        changed = False
        for l in LETTERS:
            if len(candidates[l]) == 1:
                s = next(iter(candidates[l]))
                for m in LETTERS:
                    if m != l and s in candidates[m]:
                        candidates[m].discard(s)
                        if not candidates[m]:
                            raise NoConsistentBijection(
                                f"letter {m} eliminated by pinning {l}"
                            )
                        changed = True
    mapping = {
        l: next(iter(c)) for l, c in candidates.items() if len(c) == 1
    }
    # Group the rest into equivalence classes by candidate set.
    ambiguous: dict[tuple[Fa3State, ...], list[str]] = {}
    for l in LETTERS:
        if l not in mapping:
            key = tuple(sorted(candidates[l]))
            ambiguous.setdefault(key, []).append(l)
    classes = []
    for key, ls in sorted(ambiguous.items(), key=lambda kv: kv[1]):
        if len(ls) != len(key):
            raise NoConsistentBijection(
                f"letters {ls} share candidate states {key}"
            )
        classes.append((tuple(ls), key))
    # Every state must be covered exactly once.
    used = list(mapping.values()) + [s for _, sts in classes for s in sts]
    if sorted(used) != states:
        raise NoConsistentBijection("mapping does not cover all 20 states")
    return LabelAssignment(mapping=mapping, ambiguous=classes)


def fa3_dump(fa3: Fa3, labels: Optional[LabelAssignment] = None) -> dict:
    """JSON-serializable description of FA3 (states, labels, transitions)."""
    inv: dict[Fa3State, str] = {}
    if labels is not None:
        inv = {v: k for k, v in labels.mapping.items()}
        for ls, sts in labels.ambiguous:
            for s in sts:
                inv[s] = "/".join(ls)
    def name(s: Fa3State) -> str:
        return f"{s.owner.value},{s.p0.value},{s.p1.value}"
    return {
        "initial": name(fa3.initial),
        "states": [
            {
                "state": name(s),
                "label": inv.get(s),
                "eps_only": fa3.is_eps_only(s),
            }
            for s in sorted(fa3.states)
        ],
        "transitions": sorted(
            (
                {
                    "from": name(s),
                    "event": repr(e),
                    "to": name(t),
                    "eps": e.is_eps,
                }
                for (s, e), t in fa3.moves.items()
            ),
            key=lambda d: (d["from"], d["event"]),
        ),
    }
