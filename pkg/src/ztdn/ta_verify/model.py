"""Automata declarations and their compiled, index-based form.

Clocks use digital (integer) semantics. Clock guards and invariants must be
non-strict (``<=``, ``>=``, ``==``); invariants are upper bounds only. Each
clock has a ceiling at least as large as every constant it is compared with,
so clock values above the ceiling are indistinguishable and get stored as
``ceiling + 1``.
"""

from __future__ import annotations

import enum
import operator
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .expr import (
    AtLocation,
    Compare,
    Const,
    Deadlock,
    Expr,
    ExprError,
    Imply,
    And,
    Not,
    Or,
    conjuncts,
    parse_expr,
    parse_sync,
    parse_update,
)

OPS: dict[str, Callable[[int, int], bool]] = {
    "<=": operator.le,
    ">=": operator.ge,
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    ">": operator.gt,
}
CLOCK_OPS = ("<=", ">=", "==")


class ModelError(ValueError):
    """Invalid automata network; messages carry ``line N:`` prefixes when known."""


# declarations: what a model file (or Python code) describes


@dataclass
class EdgeDecl:
    source: str
    target: str
    guard: str = ""
    sync: Optional[str] = None
    update: str = ""
    tags: tuple[str, ...] = ()
    line: int = 0


@dataclass
class AutomatonDecl:
    name: str
    locations: list[str]
    initial: str
    clocks: dict[str, int] = field(default_factory=dict)
    invariants: dict[str, str] = field(default_factory=dict)
    edges: list[EdgeDecl] = field(default_factory=list)
    line: int = 0


@dataclass
class VariableDecl:
    name: str
    lo: int
    hi: int
    init: int = 0
    line: int = 0


@dataclass
class NetworkDecl:
    name: str
    automata: list[AutomatonDecl]
    channels: list[str] = field(default_factory=list)
    variables: list[VariableDecl] = field(default_factory=list)
    constants: dict[str, int] = field(default_factory=dict)
    queries: dict[str, str] = field(default_factory=dict)
    variants: dict[str, tuple[str, ...]] = field(default_factory=dict)


# compiled form


@dataclass(frozen=True)
class ClockAtom:
    clock: int  # index into the automaton's clocks
    op: str
    bound: int

    def holds(self, value: int) -> bool:
        return OPS[self.op](value, self.bound)


@dataclass(frozen=True)
class VarAtom:
    var: int
    op: str
    value: int


@dataclass(frozen=True)
class Assign:
    var: int
    source: Optional[int]
    offset: int


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    clock_guard: tuple[ClockAtom, ...] = ()
    var_guard: tuple[VarAtom, ...] = ()
    sync: Optional[tuple[str, str]] = None
    resets: tuple[int, ...] = ()
    assigns: tuple[Assign, ...] = ()
    text: str = ""
    tags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Automaton:
    name: str
    locations: tuple[str, ...]
    initial: int
    clocks: tuple[str, ...]
    ceilings: tuple[int, ...]
    invariants: tuple[tuple[ClockAtom, ...], ...]
    edges: tuple[Edge, ...]

    def location_index(self, name: str) -> int:
        try:
            return self.locations.index(name)
        except ValueError:
            raise ModelError(f"{self.name}: unknown location {name!r}") from None

    @property
    def initial_location(self) -> str:
        return self.locations[self.initial]


@dataclass(frozen=True)
class Variable:
    name: str
    lo: int
    hi: int
    init: int


@dataclass(frozen=True)
class Network:
    name: str
    automata: tuple[Automaton, ...]
    channels: tuple[str, ...]
    variables: tuple[Variable, ...]
    constants: tuple[tuple[str, int], ...] = ()

    def automaton(self, name: str) -> Automaton:
        for aut in self.automata:
            if aut.name == name:
                return aut
        raise ModelError(f"unknown automaton {name!r}")

    def var_index(self, name: str) -> int:
        for i, var in enumerate(self.variables):
            if var.name == name:
                return i
        raise ModelError(f"unknown variable {name!r}")

    def clock_offsets(self) -> list[int]:
        offsets, total = [], 0
        for aut in self.automata:
            offsets.append(total)
            total += len(aut.clocks)
        return offsets


class QueryKind(str, enum.Enum):
    DEADLOCK_FREE = "DeadlockFree"
    SAFETY = "Safety"
    REACHABLE = "Reachable"


@dataclass(frozen=True)
class Query:
    kind: QueryKind
    predicate: Expr
    text: str = ""
    name: str = ""


def parse_query(text: str, name: str = "") -> Query:
    """``A[] not deadlock``, ``A[] <predicate>`` or ``E<> <predicate>``."""
    stripped = text.strip()
    if stripped.startswith("A[]"):
        body = parse_expr(stripped[3:])
        if body == Not(Deadlock()):
            return Query(QueryKind.DEADLOCK_FREE, body, stripped, name)
        return Query(QueryKind.SAFETY, body, stripped, name)
    if stripped.startswith("E<>"):
        return Query(QueryKind.REACHABLE, parse_expr(stripped[3:]), stripped, name)
    raise ExprError(f"query must start with 'A[]' or 'E<>': {text!r}")


# compilation


def _where(line: int) -> str:
    return f"line {line}: " if line else ""


def _const(value: Union[int, str], constants: dict[str, int], line: int) -> int:
    if isinstance(value, int):
        return value
    if value in constants:
        return constants[value]
    raise ModelError(f"{_where(line)}unknown constant {value!r}")


def compile_network(decl: NetworkDecl, enabled_tags: frozenset[str] | set[str] = frozenset()) -> Network:
    """Resolve names to indices, drop edges whose tags are not enabled, check well-formedness."""
    consts = dict(decl.constants)
    var_names = [v.name for v in decl.variables]
    if len(set(var_names)) != len(var_names):
        raise ModelError("duplicate variable name")
    variables = []
    for v in decl.variables:
        if not v.lo <= v.init <= v.hi:
            raise ModelError(f"{_where(v.line)}variable {v.name}: init {v.init} outside [{v.lo},{v.hi}]")
        variables.append(Variable(v.name, v.lo, v.hi, v.init))
    channels = tuple(decl.channels)
    if len(set(channels)) != len(channels):
        raise ModelError("duplicate channel name")

    names = [a.name for a in decl.automata]
    if not names:
        raise ModelError("network needs at least one automaton")
    if len(set(names)) != len(names):
        raise ModelError("duplicate automaton name")

    automata = tuple(_compile_automaton(a, var_names, channels, consts, enabled_tags) for a in decl.automata)

    senders: dict[str, set[int]] = {}
    receivers: dict[str, set[int]] = {}
    for i, aut in enumerate(automata):
        for e in aut.edges:
            if e.sync is not None:
                (senders if e.sync[1] == "!" else receivers).setdefault(e.sync[0], set()).add(i)
    for chan in set(senders) | set(receivers):
        s, r = senders.get(chan, set()), receivers.get(chan, set())
        if not s or not r or (len(s | r) < 2):
            raise ModelError(f"channel {chan!r} needs '!' and '?' edges in distinct automata")

    return Network(decl.name, automata, channels, tuple(variables), tuple(sorted(consts.items())))


def _compile_automaton(
    a: AutomatonDecl,
    var_names: list[str],
    channels: tuple[str, ...],
    consts: dict[str, int],
    enabled_tags: frozenset[str] | set[str],
) -> Automaton:
    where = _where(a.line)
    if len(set(a.locations)) != len(a.locations):
        raise ModelError(f"{where}{a.name}: duplicate location")
    if a.initial not in a.locations:
        raise ModelError(f"{where}{a.name}: initial location {a.initial!r} is not declared")
    clocks = tuple(a.clocks)
    ceilings = tuple(int(a.clocks[c]) for c in clocks)
    if any(c < 0 for c in ceilings):
        raise ModelError(f"{where}{a.name}: clock ceilings must be >= 0")
    clash = set(clocks) & set(var_names)
    if clash:
        raise ModelError(f"{where}{a.name}: clock names clash with variables: {sorted(clash)}")

    def clock_atom(c: Compare, line: int, *, invariant: bool) -> ClockAtom:
        idx = clocks.index(c.name)
        bound = _const(c.value, consts, line)
        allowed = ("<=",) if invariant else CLOCK_OPS
        if c.op not in allowed:
            kind = "invariant" if invariant else "guard"
            raise ModelError(
                f"{_where(line)}{a.name}: clock {kind} on {c.name} must use {' or '.join(allowed)}, got {c.op!r}"
            )
        if bound < 0 or bound > ceilings[idx]:
            raise ModelError(
                f"{_where(line)}{a.name}: constant {bound} outside [0, ceiling {ceilings[idx]}] of clock {c.name}"
            )
        return ClockAtom(idx, c.op, bound)

    invariants: list[tuple[ClockAtom, ...]] = [() for _ in a.locations]
    for loc, text in a.invariants.items():
        if loc not in a.locations:
            raise ModelError(f"{where}{a.name}: invariant on unknown location {loc!r}")
        atoms = []
        try:
            parts = conjuncts(parse_expr(text))
        except ExprError as exc:
            raise ModelError(f"{where}{a.name}.{loc}: {exc}") from None
        for part in parts:
            if not isinstance(part, Compare) or part.name not in clocks:
                raise ModelError(f"{where}{a.name}.{loc}: invariants are clock upper bounds, got {text!r}")
            atoms.append(clock_atom(part, a.line, invariant=True))
        invariants[a.locations.index(loc)] = tuple(atoms)

    edges = []
    for e in a.edges:
        if e.tags and not set(e.tags) <= set(enabled_tags):
            continue
        ew = _where(e.line or a.line)
        line = e.line or a.line
        for loc in (e.source, e.target):
            if loc not in a.locations:
                raise ModelError(f"{ew}{a.name}: edge uses unknown location {loc!r}")
        try:
            guard_parts = conjuncts(parse_expr(e.guard))
            sync = parse_sync(e.sync)
            updates = parse_update(e.update)
        except ExprError as exc:
            raise ModelError(f"{ew}{a.name}: {exc}") from None
        cg, vg = [], []
        for part in guard_parts:
            if not isinstance(part, Compare):
                raise ModelError(f"{ew}{a.name}: guards are conjunctions of comparisons, got {e.guard!r}")
            if part.name in clocks:
                cg.append(clock_atom(part, line, invariant=False))
            elif part.name in var_names:
                vg.append(VarAtom(var_names.index(part.name), part.op, _const(part.value, consts, line)))
            else:
                raise ModelError(f"{ew}{a.name}: guard references undeclared name {part.name!r}")
        if sync is not None and sync[0] not in channels:
            raise ModelError(f"{ew}{a.name}: undeclared channel {sync[0]!r}")
        resets, assigns = [], []
        for upd in updates:
            if upd.target in clocks:
                if upd.source is not None and upd.source not in consts:
                    raise ModelError(f"{ew}{a.name}: clocks can only be reset to 0")
                value = consts[upd.source] if upd.source is not None else upd.offset
                if value != 0:
                    raise ModelError(f"{ew}{a.name}: clocks can only be reset to 0")
                resets.append(clocks.index(upd.target))
            elif upd.target in var_names:
                if upd.source is None:
                    assigns.append(Assign(var_names.index(upd.target), None, int(upd.offset)))
                elif upd.source in var_names:
                    assigns.append(Assign(var_names.index(upd.target), var_names.index(upd.source), int(upd.offset)))
                elif upd.source in consts:
                    assigns.append(Assign(var_names.index(upd.target), None, consts[upd.source] + int(upd.offset)))
                else:
                    raise ModelError(f"{ew}{a.name}: update reads undeclared name {upd.source!r}")
            else:
                raise ModelError(f"{ew}{a.name}: update writes undeclared name {upd.target!r}")
        text = f"{a.name}: {e.source} -> {e.target}"
        extras = [x for x in (e.guard.strip(), (e.sync or "").strip(), e.update.strip()) if x]
        if extras:
            text += " [" + "; ".join(extras) + "]"
        edges.append(
            Edge(
                a.locations.index(e.source),
                a.locations.index(e.target),
                tuple(cg),
                tuple(vg),
                sync,
                tuple(resets),
                tuple(assigns),
                text,
                frozenset(e.tags),
            )
        )
    return Automaton(
        a.name,
        tuple(a.locations),
        a.locations.index(a.initial),
        clocks,
        ceilings,
        tuple(invariants),
        tuple(edges),
    )


def check_predicate(network: Network, expr: Expr) -> None:
    """Raise ModelError if the predicate names something the network lacks."""
    consts = dict(network.constants)
    if isinstance(expr, (Const, Deadlock)):
        return
    if isinstance(expr, AtLocation):
        network.automaton(expr.automaton).location_index(expr.location)
        return
    if isinstance(expr, Compare):
        if "." in expr.name:
            aut_name, clock = expr.name.split(".", 1)
            aut = network.automaton(aut_name)
            if clock not in aut.clocks:
                raise ModelError(f"{aut_name}: unknown clock {clock!r}")
            bound = _const(expr.value, consts, 0)
            if expr.op in ("<", ">", "!=") or bound > aut.ceilings[aut.clocks.index(clock)]:
                raise ModelError(f"clock predicate {expr.name} {expr.op} {bound} exceeds digital-clock precision")
        else:
            network.var_index(expr.name)
            _const(expr.value, consts, 0)
        return
    if isinstance(expr, Not):
        check_predicate(network, expr.arg)
    elif isinstance(expr, (And, Or)):
        for arg in expr.args:
            check_predicate(network, arg)
    elif isinstance(expr, Imply):
        check_predicate(network, expr.left)
        check_predicate(network, expr.right)
