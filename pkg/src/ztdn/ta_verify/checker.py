"""Breadth-first explicit-state checking with digital clocks.

A state is ``(locations, variables, clocks)``, all integer tuples. Successors
are generated in a fixed order: automata in declaration order, their edges in
declaration order (a ``chan!`` edge pairs with ``chan?`` edges of the other
automata, again in declaration order), and the unit delay last.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .expr import And, AtLocation, Compare, Const, Deadlock, Expr, Imply, Not, Or, parse_expr
from .model import (
    OPS,
    Edge,
    ModelError,
    Network,
    Query,
    QueryKind,
    check_predicate,
    parse_query,
)

DEFAULT_MAX_STATES = 10**6

State = tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]


class Status(str, enum.Enum):
    HOLDS = "Holds"
    VIOLATED = "Violated"
    UNKNOWN = "Unknown"


class StateBoundExceeded(RuntimeError):
    def __init__(self, bound: int):
        super().__init__(f"state bound of {bound} exceeded")
        self.bound = bound


class WitnessError(ValueError):
    pass


@dataclass(frozen=True)
class Step:
    """One transition. ``parts`` is empty for a unit delay."""

    parts: tuple[tuple[int, int], ...] = ()  # (automaton index, edge index)
    label: str = "delay 1"

    @property
    def is_delay(self) -> bool:
        return not self.parts


@dataclass
class ExploreSummary:
    states: int
    transitions: int
    deadlocks: int


@dataclass
class CheckResult:
    query: Query
    status: Status
    states_explored: int
    transitions: int
    witness: Optional[list[Step]] = None
    final_state: Optional[State] = None

    @property
    def holds(self) -> Optional[bool]:
        if self.status is Status.UNKNOWN:
            return None
        return self.status is Status.HOLDS


class Explorer:
    """Successor relation over a compiled network."""

    def __init__(self, network: Network):
        self.network = network
        self.offsets = network.clock_offsets()
        self.caps = tuple(c + 1 for aut in network.automata for c in aut.ceilings)
        self.out_edges: list[list[list[int]]] = []
        self.receivers: dict[str, list[tuple[int, int, int]]] = {}
        for i, aut in enumerate(network.automata):
            per_loc: list[list[int]] = [[] for _ in aut.locations]
            for k, e in enumerate(aut.edges):
                per_loc[e.source].append(k)
                if e.sync is not None and e.sync[1] == "?":
                    self.receivers.setdefault(e.sync[0], []).append((i, e.source, k))
            self.out_edges.append(per_loc)

    def initial(self) -> State:
        locs = tuple(aut.initial for aut in self.network.automata)
        vals = tuple(v.init for v in self.network.variables)
        clocks = tuple(0 for _ in self.caps)
        state = (locs, vals, clocks)
        if not self._invariants_hold(locs, clocks):
            raise ModelError("initial state violates a location invariant")
        return state

    def _enabled(self, i: int, e: Edge, state: State) -> bool:
        _, vals, clocks = state
        off = self.offsets[i]
        for atom in e.clock_guard:
            if not atom.holds(clocks[off + atom.clock]):
                return False
        for atom in e.var_guard:
            if not OPS[atom.op](vals[atom.var], atom.value):
                return False
        return True

    def _invariants_hold(self, locs: tuple[int, ...], clocks: tuple[int, ...]) -> bool:
        for i, aut in enumerate(self.network.automata):
            off = self.offsets[i]
            for atom in aut.invariants[locs[i]]:
                if not atom.holds(clocks[off + atom.clock]):
                    return False
        return True

    def _fire(self, state: State, parts: Iterable[tuple[int, Edge]]) -> Optional[State]:
        locs, vals, clocks = (list(x) for x in state)
        for i, e in parts:
            locs[i] = e.target
            off = self.offsets[i]
            for c in e.resets:
                clocks[off + c] = 0
            for a in e.assigns:
                value = (vals[a.source] if a.source is not None else 0) + a.offset
                var = self.network.variables[a.var]
                if not var.lo <= value <= var.hi:
                    raise ModelError(
                        f"{self.network.automata[i].name}: assignment {var.name} := {value} outside [{var.lo},{var.hi}]"
                    )
                vals[a.var] = value
        new_locs, new_clocks = tuple(locs), tuple(clocks)
        if not self._invariants_hold(new_locs, new_clocks):
            return None
        return new_locs, tuple(vals), new_clocks

    def successors(self, state: State) -> list[tuple[Step, State]]:
        out: list[tuple[Step, State]] = []
        automata = self.network.automata
        locs = state[0]
        for i, aut in enumerate(automata):
            for k in self.out_edges[i][locs[i]]:
                e = aut.edges[k]
                if not self._enabled(i, e, state):
                    continue
                if e.sync is None:
                    nxt = self._fire(state, [(i, e)])
                    if nxt is not None:
                        out.append((Step(((i, k),), e.text), nxt))
                elif e.sync[1] == "!":
                    for j, src, m in self.receivers.get(e.sync[0], ()):
                        if j == i or locs[j] != src:
                            continue
                        r = automata[j].edges[m]
                        if not self._enabled(j, r, state):
                            continue
                        nxt = self._fire(state, [(i, e), (j, r)])
                        if nxt is not None:
                            out.append((Step(((i, k), (j, m)), f"{e.text} | {r.text}"), nxt))
        delayed = tuple(min(c + 1, cap) for c, cap in zip(state[2], self.caps))
        if self._invariants_hold(locs, delayed):
            out.append((Step(), (locs, state[1], delayed)))
        return out

    def describe(self, state: State) -> str:
        locs, vals, clocks = state
        parts = [f"{aut.name}.{aut.locations[l]}" for aut, l in zip(self.network.automata, locs)]
        parts += [f"{v.name}={x}" for v, x in zip(self.network.variables, vals)]
        for i, aut in enumerate(self.network.automata):
            for c, name in enumerate(aut.clocks):
                value = clocks[self.offsets[i] + c]
                shown = f">{aut.ceilings[c]}" if value > aut.ceilings[c] else str(value)
                parts.append(f"{aut.name}.{name}={shown}")
        return " ".join(parts)


def compile_predicate(network: Network, expr: Expr) -> Callable[[State, Callable[[], bool]], bool]:
    """Turn a predicate into ``f(state, is_deadlocked) -> bool``."""
    check_predicate(network, expr)
    consts = dict(network.constants)
    offsets = network.clock_offsets()

    def build(e: Expr) -> Callable[[State, Callable[[], bool]], bool]:
        if isinstance(e, Const):
            return lambda s, d, v=e.value: v
        if isinstance(e, Deadlock):
            return lambda s, d: d()
        if isinstance(e, AtLocation):
            i = [a.name for a in network.automata].index(e.automaton)
            loc = network.automata[i].location_index(e.location)
            return lambda s, d: s[0][i] == loc
        if isinstance(e, Compare):
            fn = OPS[e.op]
            value = e.value if isinstance(e.value, int) else consts[e.value]
            if "." in e.name:
                aut_name, clock = e.name.split(".", 1)
                i = [a.name for a in network.automata].index(aut_name)
                idx = offsets[i] + network.automata[i].clocks.index(clock)
                return lambda s, d: fn(s[2][idx], value)
            idx = network.var_index(e.name)
            return lambda s, d: fn(s[1][idx], value)
        if isinstance(e, Not):
            inner = build(e.arg)
            return lambda s, d: not inner(s, d)
        if isinstance(e, And):
            args = [build(a) for a in e.args]
            return lambda s, d: all(f(s, d) for f in args)
        if isinstance(e, Or):
            args = [build(a) for a in e.args]
            return lambda s, d: any(f(s, d) for f in args)
        if isinstance(e, Imply):
            left, right = build(e.left), build(e.right)
            return lambda s, d: (not left(s, d)) or right(s, d)
        raise ModelError(f"unsupported predicate node {e!r}")

    return build(expr)


def _trace(parents: dict[State, Optional[tuple[State, Step]]], state: State) -> list[Step]:
    steps: list[Step] = []
    while True:
        link = parents[state]
        if link is None:
            break
        state, step = link
        steps.append(step)
    steps.reverse()
    return steps


def explore(network: Network, max_states: int = DEFAULT_MAX_STATES) -> ExploreSummary:
    """Enumerate every reachable state. Raises StateBoundExceeded past ``max_states``."""
    ex = Explorer(network)
    init = ex.initial()
    seen = {init}
    queue = deque([init])
    transitions = deadlocks = 0
    while queue:
        state = queue.popleft()
        succ = ex.successors(state)
        if not succ:
            deadlocks += 1
        for _, nxt in succ:
            transitions += 1
            if nxt not in seen:
                if len(seen) >= max_states:
                    raise StateBoundExceeded(max_states)
                seen.add(nxt)
                queue.append(nxt)
    return ExploreSummary(len(seen), transitions, deadlocks)


def check(network: Network, query: Query | str, max_states: int = DEFAULT_MAX_STATES) -> CheckResult:
    """Answer a query by BFS; the first counterexample or target found is the witness."""
    if isinstance(query, str):
        query = parse_query(query)
    ex = Explorer(network)
    pred = compile_predicate(network, query.predicate)
    init = ex.initial()
    parents: dict[State, Optional[tuple[State, Step]]] = {init: None}
    queue = deque([init])
    transitions = 0
    cache: dict[State, list[tuple[Step, State]]] = {}

    def succ_of(s: State) -> list[tuple[Step, State]]:
        if s not in cache:
            cache.clear()
            cache[s] = ex.successors(s)
        return cache[s]

    def found(state: State) -> bool:
        # True when this state settles the query
        deadlocked = lambda: not succ_of(state)  # noqa: E731
        if query.kind is QueryKind.REACHABLE:
            return pred(state, deadlocked)
        if query.kind is QueryKind.SAFETY:
            return not pred(state, deadlocked)
        return deadlocked()

    def result(status: Status, state: Optional[State] = None) -> CheckResult:
        witness = _trace(parents, state) if state is not None else None
        return CheckResult(query, status, len(parents), transitions, witness, state)

    settled = Status.HOLDS if query.kind is QueryKind.REACHABLE else Status.VIOLATED
    unsettled = Status.VIOLATED if query.kind is QueryKind.REACHABLE else Status.HOLDS
    if found(init):
        return result(settled, init)
    while queue:
        state = queue.popleft()
        for step, nxt in succ_of(state):
            transitions += 1
            if nxt in parents:
                continue
            if len(parents) >= max_states:
                return CheckResult(query, Status.UNKNOWN, len(parents), transitions)
            parents[nxt] = (state, step)
            if found(nxt):
                return result(settled, nxt)
            queue.append(nxt)
    return result(unsettled)


def replay(network: Network, witness: list[Step]) -> State:
    """Re-execute a witness from the initial state and return where it ends."""
    ex = Explorer(network)
    state = ex.initial()
    for n, step in enumerate(witness):
        for cand, nxt in ex.successors(state):
            if cand.parts == step.parts:
                state = nxt
                break
        else:
            raise WitnessError(f"step {n} ({step.label}) is not enabled in {ex.describe(state)}")
    return state


def evaluate(network: Network, predicate: str | Expr, state: State) -> bool:
    expr = parse_expr(predicate) if isinstance(predicate, str) else predicate
    ex = Explorer(network)
    return compile_predicate(network, expr)(state, lambda: not ex.successors(state))


def format_witness(network: Network, witness: list[Step]) -> list[str]:
    """Human-readable witness lines, each followed by the state it reaches."""
    ex = Explorer(network)
    state = ex.initial()
    lines = [f"  init: {ex.describe(state)}"]
    for step in witness:
        for cand, nxt in ex.successors(state):
            if cand.parts == step.parts:
                state = nxt
                break
        lines.append(f"  {step.label}")
        lines.append(f"    -> {ex.describe(state)}")
    return lines
