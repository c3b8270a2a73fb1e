"""Model files: YAML declarations of automata, channels, variables and queries.

See ``docs/model-format.md`` for the schema. ``builtin:NAME`` refers to a
model shipped with the package; ``builtin:NAME-VARIANT`` enables the tags
listed under that variant.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

from .. import _yaml
from .._yaml import ParseError
from .expr import ExprError
from .model import (
    AutomatonDecl,
    EdgeDecl,
    ModelError,
    Network,
    NetworkDecl,
    Query,
    VariableDecl,
    check_predicate,
    compile_network,
    parse_query,
)

BUILTIN_PREFIX = "builtin:"
BUILTIN_MODELS = ("fig4",)


class ModelFileError(ParseError):
    """Model file problems, each message prefixed with its line number."""


@dataclass
class LoadedModel:
    network: Network
    queries: list[Query]
    decl: NetworkDecl
    variant: str = ""


class _Reader:
    def __init__(self) -> None:
        self.errors: list[str] = []

    def err(self, node: Any, msg: str, line: int = 0) -> None:
        ln = line or _yaml.line_of(node)
        self.errors.append(f"line {ln}: {msg}" if ln else msg)

    def mapping(self, node: Any, what: str, line: int = 0) -> dict:
        if node is None:
            return {}
        if not isinstance(node, dict):
            self.err(node, f"{what} must be a mapping", line)
            return {}
        return node

    def integer(self, node: Any, value: Any, what: str) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            self.err(node, f"{what} must be an integer, got {value!r}")
            return 0
        return value

    def text(self, node: Any, value: Any, what: str) -> str:
        if value is None:
            return ""
        if isinstance(value, bool) or not isinstance(value, (str, int)):
            self.err(node, f"{what} must be a string, got {value!r}")
            return ""
        return str(value)


_TOP_KEYS = {"name", "constants", "channels", "vars", "automata", "queries", "variants"}
_AUT_KEYS = {"name", "clocks", "initial", "locations", "edges"}
_EDGE_KEYS = {"from", "to", "guard", "sync", "update", "tags"}


def parse_model(text: str) -> NetworkDecl:
    """Parse YAML text into declarations. All problems are reported together."""
    data = _yaml.load(text)
    r = _Reader()
    if not isinstance(data, dict):
        raise ModelFileError("line 1: model file must be a mapping")
    for key in data:
        if key not in _TOP_KEYS:
            r.err(data, f"unknown key {key!r}")
    name = r.text(data, data.get("name", "model"), "name") or "model"

    constants = {}
    for k, v in r.mapping(data.get("constants"), "constants", data.line).items():
        constants[str(k)] = r.integer(data["constants"], v, f"constant {k}")

    channels_node = data.get("channels") or []
    if not isinstance(channels_node, list):
        r.err(data, "channels must be a list")
        channels_node = []
    channels = [str(c) for c in channels_node]

    variables = []
    vars_node = r.mapping(data.get("vars"), "vars", data.line)
    for vname, spec in vars_node.items():
        spec = r.mapping(spec, f"var {vname}", vars_node.line)
        line = _yaml.line_of(spec, vars_node.line)
        unknown = set(spec) - {"min", "max", "init"}
        if unknown:
            r.err(spec, f"var {vname}: unknown keys {sorted(unknown)}", line)
        if "min" not in spec or "max" not in spec:
            r.err(spec, f"var {vname}: min and max are required", line)
            continue
        lo = r.integer(spec, spec["min"], f"var {vname} min")
        hi = r.integer(spec, spec["max"], f"var {vname} max")
        init = r.integer(spec, spec.get("init", lo), f"var {vname} init")
        variables.append(VariableDecl(str(vname), lo, hi, init, line))

    automata = []
    aut_nodes = data.get("automata")
    if not isinstance(aut_nodes, list) or not aut_nodes:
        r.err(data, "automata must be a non-empty list")
        aut_nodes = []
    for node in aut_nodes:
        if not isinstance(node, dict):
            r.err(aut_nodes, "each automaton must be a mapping")
            continue
        automata.append(_parse_automaton(r, node))

    queries = {}
    q_node = r.mapping(data.get("queries"), "queries", data.line)
    for qname, formula in q_node.items():
        queries[str(qname)] = r.text(q_node, formula, f"query {qname}")

    variants = {}
    v_node = r.mapping(data.get("variants"), "variants", data.line)
    for vname, spec in v_node.items():
        spec = r.mapping(spec, f"variant {vname}", v_node.line)
        enable = spec.get("enable") or []
        if not isinstance(enable, list):
            r.err(spec, f"variant {vname}: enable must be a list of tags")
            enable = []
        variants[str(vname)] = tuple(str(t) for t in enable)

    if r.errors:
        raise ModelFileError(r.errors)
    return NetworkDecl(name, automata, channels, variables, constants, queries, variants)


def _parse_automaton(r: _Reader, node: dict) -> AutomatonDecl:
    line = _yaml.line_of(node)
    for key in node:
        if key not in _AUT_KEYS:
            r.err(node, f"automaton: unknown key {key!r}")
    name = r.text(node, node.get("name"), "automaton name")
    if not name:
        r.err(node, "automaton needs a name")
    clocks = {}
    for c, ceiling in r.mapping(node.get("clocks"), f"{name}.clocks", line).items():
        clocks[str(c)] = r.integer(node, ceiling, f"{name}: ceiling of clock {c}")
    locations: list[str] = []
    invariants: dict[str, str] = {}
    loc_node = node.get("locations")
    if isinstance(loc_node, list):
        locations = [str(x) for x in loc_node]
    elif isinstance(loc_node, dict):
        for loc, spec in loc_node.items():
            locations.append(str(loc))
            spec = r.mapping(spec, f"{name}.{loc}", loc_node.line)
            if set(spec) - {"invariant"}:
                r.err(spec, f"{name}.{loc}: only 'invariant' is allowed", loc_node.line)
            if spec.get("invariant"):
                invariants[str(loc)] = r.text(spec, spec["invariant"], f"{name}.{loc} invariant")
    else:
        r.err(node, f"{name}: locations must be a list or mapping")
    initial = r.text(node, node.get("initial"), f"{name} initial")
    if not initial:
        r.err(node, f"{name}: initial location is required")
    edges = []
    edge_nodes = node.get("edges") or []
    if not isinstance(edge_nodes, list):
        r.err(node, f"{name}: edges must be a list")
        edge_nodes = []
    for e in edge_nodes:
        if not isinstance(e, dict):
            r.err(edge_nodes, f"{name}: each edge must be a mapping")
            continue
        for key in e:
            if key not in _EDGE_KEYS:
                r.err(e, f"{name}: edge has unknown key {key!r}")
        if "from" not in e or "to" not in e:
            r.err(e, f"{name}: edge needs 'from' and 'to'")
            continue
        tags = e.get("tags") or []
        if isinstance(tags, str):
            tags = [tags]
        edges.append(
            EdgeDecl(
                r.text(e, e["from"], "from"),
                r.text(e, e["to"], "to"),
                r.text(e, e.get("guard"), "guard"),
                r.text(e, e.get("sync"), "sync") or None,
                r.text(e, e.get("update"), "update"),
                tuple(str(t) for t in tags),
                _yaml.line_of(e),
            )
        )
    return AutomatonDecl(name, locations, initial, clocks, invariants, edges, line)


def build(decl: NetworkDecl, variant: str = "") -> LoadedModel:
    """Compile declarations, enabling the tags of ``variant``, and compile their queries."""
    if variant and variant not in decl.variants:
        raise ModelFileError(f"unknown variant {variant!r}; known: {sorted(decl.variants)}")
    tags = frozenset(decl.variants.get(variant, ()))
    try:
        network = compile_network(decl, tags)
        queries = []
        for qname, formula in decl.queries.items():
            q = parse_query(formula, qname)
            check_predicate(network, q.predicate)
            queries.append(q)
    except (ModelError, ExprError) as exc:
        raise ModelFileError(str(exc)) from None
    return LoadedModel(network, queries, decl, variant)


def _builtin_text(name: str) -> str:
    return resources.files(__package__).joinpath("builtin").joinpath(f"{name}.yaml").read_text(encoding="utf-8")


def load_model(ref: str) -> LoadedModel:
    """Load a model file path or ``builtin:NAME[-VARIANT]``."""
    if ref.startswith(BUILTIN_PREFIX):
        name = ref[len(BUILTIN_PREFIX):]
        base, variant = name, ""
        for known in BUILTIN_MODELS:
            if name == known or name.startswith(known + "-"):
                base, variant = known, name[len(known) + 1:]
                break
        else:
            raise ModelFileError(f"unknown builtin model {name!r}; known: {', '.join(BUILTIN_MODELS)}")
        return build(parse_model(_builtin_text(base)), variant)
    text = Path(ref).read_text(encoding="utf-8")
    return build(parse_model(text))


def builtin_models() -> dict[str, Any]:
    """The shipped User, PDP and PE templates and their composed network.

    Templates are single-automaton declarations; ``fig5_network`` is the
    compiled composition with the tamper edge disabled.
    """
    decl = parse_model(_builtin_text("fig4"))
    by_name = {a.name: a for a in decl.automata}
    return {
        "fig4_user": by_name["User"],
        "fig4_pdp": by_name["PDP"],
        "fig4_pe": by_name["PE"],
        "fig5_network": build(decl).network,
    }
