"""Command-line entry point: ``ztdn simulate | verify | bench | report``.

Exit codes are shared by every subcommand: 0 ok, 1 a checked property is
violated, 2 usage or input error, 3 verification inconclusive (state bound).
Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import agent_bench, netsim
from ._yaml import ParseError
from .core_model import Role
from .scenario import load_scenario
from .ta_verify import check, format_witness, load_model, parse_query
from .ta_verify.checker import DEFAULT_MAX_STATES, Status
from .ta_verify.expr import ExprError
from .ta_verify.model import ModelError

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_USAGE = 2
EXIT_UNKNOWN = 3


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_USAGE


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        config = load_scenario(args.scenario)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        report = netsim.run(config)
    except ParseError as exc:
        for line in exc.errors:
            print(f"{args.scenario}: {line}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        return _fail(str(exc))
    _write(args.out, report.to_json())
    if args.access_log:
        _write(args.access_log, report.access_log_csv())
    if args.kpi_csv:
        _write(args.kpi_csv, report.kpi_csv())
    print(report.verdict_summary())
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        model = load_model(args.model)
        by_name = {q.name: q for q in model.queries}
        if args.query:
            queries = []
            for q in args.query:
                if q in by_name:
                    queries.append(by_name[q])
                elif q.lstrip().startswith(("A[]", "E<>")):
                    queries.append(parse_query(q, q))
                else:
                    return _fail(f"unknown query {q!r}; model defines: {', '.join(by_name) or 'none'}")
        else:
            queries = model.queries
        if not queries:
            return _fail("no queries given and the model defines none")
        results = [check(model.network, q, max_states=args.max_states) for q in queries]
    except ParseError as exc:
        for line in exc.errors:
            print(f"{args.model}: {line}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, ExprError, OSError) as exc:
        return _fail(str(exc))

    for r in results:
        print(
            f"{r.query.name}: {r.query.text} -> {r.status.value} "
            f"({r.states_explored} states, {r.transitions} transitions)"
        )
        if r.witness is not None and r.status is not Status.UNKNOWN:
            kind = "counterexample" if r.status is Status.VIOLATED else "witness"
            print(f"  {kind} ({len(r.witness)} steps):")
            for line in format_witness(model.network, r.witness):
                print(f"  {line}")
    statuses = {r.status for r in results}
    if Status.VIOLATED in statuses:
        return EXIT_VIOLATED
    if Status.UNKNOWN in statuses:
        return EXIT_UNKNOWN
    return EXIT_OK


def _summary_table(summary: list[agent_bench.GroupSummary]) -> str:
    header = ("task_group", "n", "check_mean_us", "check_min_us", "check_max_us", "rt_mean_us", "rt_min_us", "rt_max_us")
    rows = [
        (
            s.task_group.value,
            str(s.count),
            f"{s.policy_check_mean:.3f}",
            f"{s.policy_check_min:.3f}",
            f"{s.policy_check_max:.3f}",
            f"{s.round_trip_mean:.3f}",
            f"{s.round_trip_min:.3f}",
            f"{s.round_trip_max:.3f}",
        )
        for s in summary
    ]
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(r, widths))) for r in [header, *rows]]
    return "\n".join(lines)


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        config = agent_bench.BenchConfig(
            requests_per_run=args.requests,
            runs=args.runs,
            user_role=Role.ADMINISTRATOR if args.role == "admin" else Role.NORMAL_USER,
            timing_mode=agent_bench.TimingMode.SIM if args.timing == "sim" else agent_bench.TimingMode.WALL,
        )
        report = agent_bench.run_bench(config)
        agent_bench.export_csv(report.samples, args.out)
    except (agent_bench.BenchError, OSError) as exc:
        return _fail(str(exc))
    print(f"{len(report.samples)} samples, {report.grants} granted, {report.denies} denied -> {args.out}")
    print(_summary_table(report.summary))
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    try:
        samples = agent_bench.read_csv(args.csv)
    except (agent_bench.BenchError, OSError) as exc:
        return _fail(str(exc))
    summary = agent_bench.summarize(samples)
    if args.format == "json":
        print(json.dumps([s.to_dict() for s in summary], indent=2))
    else:
        print(_summary_table(summary))
    return EXIT_OK


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ztdn", description="Zero-trust distributed network toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario file and write the report as JSON")
    p.add_argument("scenario", help="scenario YAML file")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--access-log", help="also write the access log as CSV")
    p.add_argument("--kpi-csv", help="also write per-network KPIs as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="model-check an automata network")
    p.add_argument("model", help="model YAML file or builtin:NAME (e.g. builtin:fig4, builtin:fig4-tamper-enabled)")
    p.add_argument("--query", action="append", help="query name from the model, or a formula like 'E<> User.Denied'")
    p.add_argument("--max-states", type=_positive, default=DEFAULT_MAX_STATES)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run the policy-gated agent benchmark and write samples as CSV")
    p.add_argument("--requests", type=_positive, default=50, help="requests per run (default 50)")
    p.add_argument("--runs", type=_positive, default=3, help="runs per task group (default 3)")
    p.add_argument("--role", choices=("admin", "user"), default="admin")
    p.add_argument("--timing", choices=("wall", "sim"), default="wall")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="summarize a bench CSV per task group")
    p.add_argument("csv")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
