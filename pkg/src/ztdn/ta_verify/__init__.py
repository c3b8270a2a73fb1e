"""Explicit-state checking of small timed-automata networks."""

from .checker import (
    CheckResult,
    ExploreSummary,
    StateBoundExceeded,
    Status,
    Step,
    WitnessError,
    check,
    evaluate,
    explore,
    format_witness,
    replay,
)
from .loader import LoadedModel, ModelFileError, builtin_models, build, load_model, parse_model
from .model import (
    Automaton,
    AutomatonDecl,
    EdgeDecl,
    ModelError,
    Network,
    NetworkDecl,
    Query,
    QueryKind,
    VariableDecl,
    compile_network,
    parse_query,
)

__all__ = [
    "Automaton",
    "AutomatonDecl",
    "CheckResult",
    "EdgeDecl",
    "ExploreSummary",
    "LoadedModel",
    "ModelError",
    "ModelFileError",
    "Network",
    "NetworkDecl",
    "Query",
    "QueryKind",
    "StateBoundExceeded",
    "Status",
    "Step",
    "VariableDecl",
    "WitnessError",
    "build",
    "builtin_models",
    "check",
    "compile_network",
    "evaluate",
    "explore",
    "format_witness",
    "load_model",
    "parse_model",
    "parse_query",
    "replay",
]
