"""Policy-gated agents and the policy-check timing benchmark.

Four agents work over a bundled company-registry corpus. Agents A and B
(keyword search and keyword count) serve the same request behind a single
policy check; C lists company names and D lists a company's officers. Every
request passes PEP -> PDP before any agent runs.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import re
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Union

from .core_model import (
    AccessRequest,
    EnterpriseNetwork,
    Resource,
    Role,
    UserIdentity,
)
from .decision_point import (
    CloseAll,
    PolicyAdministrator,
    PolicyDecisionPoint,
    TrustConfig,
    TrustState,
    command_pep,
)
from .enforcement_point import EnforcementPoint, ForwardedRequest
from .policy_store import PolicyCondition, PolicyStore


class AgentId(str, enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"


class Task(str, enum.Enum):
    KEYWORD_SEARCH = "KeywordSearch"
    KEYWORD_COUNT = "KeywordCount"
    COMPANY_NAMES = "CompanyNames"
    OFFICERS = "Officers"


class TaskGroup(str, enum.Enum):
    SEARCH_AND_COUNT = "SearchAndCount"
    COMPANY_NAMES = "CompanyNames"
    OFFICERS = "Officers"


class TimingMode(str, enum.Enum):
    WALL = "WallClock"
    SIM = "SimulatedDeterministic"


AGENT_TASKS: dict[AgentId, Task] = {
    AgentId.A: Task.KEYWORD_SEARCH,
    AgentId.B: Task.KEYWORD_COUNT,
    AgentId.C: Task.COMPANY_NAMES,
    AgentId.D: Task.OFFICERS,
}

GROUP_AGENTS: dict[TaskGroup, tuple[AgentId, ...]] = {
    TaskGroup.SEARCH_AND_COUNT: (AgentId.A, AgentId.B),
    TaskGroup.COMPANY_NAMES: (AgentId.C,),
    TaskGroup.OFFICERS: (AgentId.D,),
}

CSV_HEADER = ("task_group", "run", "request", "policy_check_us", "round_trip_us")


class AgentError(ValueError):
    pass


class BenchError(ValueError):
    pass


# corpus


@dataclass(frozen=True)
class Corpus:
    documents: tuple[tuple[str, str], ...]  # (name, text), sorted by name
    companies: tuple[tuple[str, tuple[str, ...]], ...]

    def officers(self, company: str) -> tuple[str, ...]:
        for name, officers in self.companies:
            if name.casefold() == company.casefold():
                return officers
        raise AgentError(f"unknown company: {company!r}")


@lru_cache(maxsize=1)
def load_corpus() -> Corpus:
    """The bundled fixture corpus (three registry pages and a company list)."""
    root = resources.files(__package__).joinpath("fixtures").joinpath("corpus")
    docs = []
    for entry in root.iterdir():
        if entry.name.endswith(".txt"):
            docs.append((entry.name[: -len(".txt")], entry.read_text(encoding="utf-8")))
    raw = json.loads(root.joinpath("companies.json").read_text(encoding="utf-8"))
    companies = tuple(sorted((name, tuple(officers)) for name, officers in raw.items()))
    return Corpus(tuple(sorted(docs)), companies)


# agents


@dataclass(frozen=True)
class AgentSpec:
    agent_id: AgentId
    task: Task
    corpus_ref: str = "fixture"

    def __post_init__(self) -> None:
        if AGENT_TASKS[AgentId(self.agent_id)] is not Task(self.task):
            raise ValueError(f"agent {self.agent_id} cannot run task {self.task}")

    @classmethod
    def of(cls, agent_id: Union[AgentId, str]) -> "AgentSpec":
        agent_id = AgentId(agent_id)
        return cls(agent_id, AGENT_TASKS[agent_id])


@dataclass(frozen=True)
class AgentResult:
    agent_id: AgentId
    task: Task
    value: Any


def _keyword_pattern(keyword: Optional[str]) -> re.Pattern[str]:
    if keyword is None or not keyword.strip():
        raise AgentError("keyword must not be empty")
    return re.compile(rf"\b{re.escape(keyword.strip())}\b", re.IGNORECASE)


def run_agent(spec: AgentSpec, input: Optional[str] = None, corpus: Optional[Corpus] = None) -> AgentResult:
    """Run one agent. Keyword matches are whole-word and case-insensitive."""
    corpus = corpus or load_corpus()
    if spec.task is Task.KEYWORD_SEARCH:
        pat = _keyword_pattern(input)
        value: Any = [name for name, text in corpus.documents if pat.search(text)]
    elif spec.task is Task.KEYWORD_COUNT:
        pat = _keyword_pattern(input)
        value = sum(len(pat.findall(text)) for _, text in corpus.documents)
    elif spec.task is Task.COMPANY_NAMES:
        needle = (input or "").casefold()
        value = [name for name, _ in corpus.companies if needle in name.casefold()]
    else:
        if not input:
            raise AgentError("company name required")
        value = list(corpus.officers(input))
    return AgentResult(spec.agent_id, spec.task, value)


# benchmark


@dataclass(frozen=True)
class SimTiming:
    """Deterministic timing: every duration is a fixed tick count."""

    service_ticks: tuple[tuple[AgentId, int], ...] = tuple((a, 100) for a in AgentId)
    transit_ticks: int = 20  # one PEP <-> PDP hop
    tick_us: float = 1.0

    def ticks_for(self, agent: AgentId) -> int:
        return dict(self.service_ticks)[agent]


@dataclass(frozen=True)
class BenchConfig:
    requests_per_run: int = 50
    runs: int = 3
    user_role: Role = Role.ADMINISTRATOR
    timing_mode: TimingMode = TimingMode.WALL
    sim: SimTiming = field(default_factory=SimTiming)
    keyword: str = "ltd"

    def __post_init__(self) -> None:
        if self.requests_per_run < 1:
            raise BenchError("requests_per_run must be >= 1")
        if self.runs < 1:
            raise BenchError("runs must be >= 1")
        object.__setattr__(self, "user_role", Role(self.user_role))
        object.__setattr__(self, "timing_mode", TimingMode(self.timing_mode))
        if sorted(a.value for a, _ in self.sim.service_ticks) != sorted(a.value for a in AgentId):
            raise BenchError("sim timing needs service ticks for every agent")
        if any(t < 0 for _, t in self.sim.service_ticks) or self.sim.transit_ticks < 0:
            raise BenchError("tick counts must be >= 0")


@dataclass(frozen=True)
class BenchScenario:
    """What sits in front of the agents: one network, one PEP, one policy."""

    network_id: str = "agents-net"
    segment_id: str = "agents"
    pep_id: str = "agents-pep"
    trust_threshold: float = 0.0
    condition: PolicyCondition = PolicyCondition(
        required_role=Role.ADMINISTRATOR, resource_scope=frozenset({"agents"})
    )
    user_id: str = "bench-user"
    seed: int = 0


@dataclass(frozen=True)
class BenchSample:
    task_group: TaskGroup
    run: int
    request: int
    policy_check_us: float
    round_trip_us: float

    def __post_init__(self) -> None:
        if not self.round_trip_us >= self.policy_check_us >= 0:
            raise ValueError(f"need round_trip >= policy_check >= 0: {self}")


@dataclass(frozen=True)
class GroupSummary:
    task_group: TaskGroup
    count: int
    policy_check_mean: float
    policy_check_min: float
    policy_check_max: float
    round_trip_mean: float
    round_trip_min: float
    round_trip_max: float

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["task_group"] = self.task_group.value
        return out


@dataclass
class BenchReport:
    samples: list[BenchSample]
    summary: list[GroupSummary]
    grants: int
    denies: int
    gated_executions: int  # requests whose agents actually ran
    agent_runs: dict[AgentId, int]
    access_log_len: int
    results: list[AgentResult] = field(default_factory=list, repr=False)


def summarize(samples: list[BenchSample]) -> list[GroupSummary]:
    out = []
    for group in TaskGroup:
        rows = [s for s in samples if s.task_group is group]
        if not rows:
            continue
        pc = [s.policy_check_us for s in rows]
        rt = [s.round_trip_us for s in rows]
        out.append(
            GroupSummary(
                group,
                len(rows),
                statistics.fmean(pc),
                min(pc),
                max(pc),
                statistics.fmean(rt),
                min(rt),
                max(rt),
            )
        )
    return out


def _group_input(group: TaskGroup, request: int, config: BenchConfig, corpus: Corpus) -> Optional[str]:
    if group is TaskGroup.SEARCH_AND_COUNT:
        return config.keyword
    if group is TaskGroup.COMPANY_NAMES:
        return ""
    return corpus.companies[request % len(corpus.companies)][0]


def run_bench(config: BenchConfig = BenchConfig(), scenario: BenchScenario = BenchScenario()) -> BenchReport:
    """Issue ``runs x requests_per_run`` requests to each task group, back to back."""
    corpus = load_corpus()
    network = EnterpriseNetwork(
        scenario.network_id, scenario.trust_threshold, frozenset({scenario.segment_id}), (scenario.pep_id,)
    )
    store = PolicyStore()
    store.create_policy(scenario.condition, at=0)
    pa = PolicyAdministrator(scenario.network_id, [scenario.user_id], seed=scenario.seed)
    pdp = PolicyDecisionPoint(network, pa)
    pep = EnforcementPoint(scenario.pep_id)
    credential = pa.issue_credential(scenario.user_id, at=0)
    user = UserIdentity(scenario.user_id, config.user_role, credential)
    trust = TrustState.initial(scenario.user_id, scenario.network_id, TrustConfig())
    resources_by_group = {
        g: Resource(f"agent-{'+'.join(a.value for a in GROUP_AGENTS[g])}", scenario.segment_id, scenario.network_id)
        for g in TaskGroup
    }

    samples: list[BenchSample] = []
    results: list[AgentResult] = []
    agent_runs = {a: 0 for a in AgentId}
    grants = denies = gated = 0
    tick = 0
    request_id = 0
    sim = config.sim

    with ThreadPoolExecutor(max_workers=2) as pool:
        for group in TaskGroup:
            resource = resources_by_group[group]
            agents = GROUP_AGENTS[group]
            for run in range(config.runs):
                for n in range(config.requests_per_run):
                    tick += 1
                    request_id += 1
                    req = AccessRequest(request_id, user, resource.resource_id, network.network_id, tick)

                    t0 = time.perf_counter_ns()
                    forwarded = pep.intercept(req, tick)
                    if not isinstance(forwarded, ForwardedRequest):
                        raise BenchError(f"PEP {pep.pep_id} refused request {request_id}")
                    t1 = time.perf_counter_ns()
                    # one policy check covers every agent of the group
                    decision, _ = pdp.evaluate(req, store, trust, tick, resource=resource)
                    t2 = time.perf_counter_ns()
                    pep.enforce(command_pep(decision, req))
                    t3 = time.perf_counter_ns()

                    if config.timing_mode is TimingMode.SIM:
                        check = max(sim.ticks_for(a) for a in agents) * sim.tick_us
                        trip = check + 2 * sim.transit_ticks * sim.tick_us
                    else:
                        check = (t2 - t1) / 1000.0
                        trip = (t3 - t0) / 1000.0
                    samples.append(BenchSample(group, run, n, check, trip))

                    if not decision.granted:
                        denies += 1
                        continue
                    grants += 1
                    if pep.attempt(user.user_id, resource.resource_id):
                        gated += 1
                        results.extend(_run_group(pool, agents, _group_input(group, n, config, corpus), corpus))
                        for a in agents:
                            agent_runs[a] += 1
                        pep.enforce(CloseAll(user.user_id))

    return BenchReport(samples, summarize(samples), grants, denies, gated, agent_runs, len(pdp.access_log), results)


def _run_group(
    pool: ThreadPoolExecutor, agents: tuple[AgentId, ...], value: Optional[str], corpus: Corpus
) -> list[AgentResult]:
    futures = [pool.submit(run_agent, AgentSpec.of(a), value, corpus) for a in agents]
    return [f.result() for f in futures]


def samples_csv(samples: list[BenchSample]) -> str:
    if not samples:
        raise BenchError("no samples to export")
    order = {g: i for i, g in enumerate(TaskGroup)}
    rows = sorted(samples, key=lambda s: (order[s.task_group], s.run, s.request))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for s in rows:
        writer.writerow([s.task_group.value, s.run, s.request, f"{s.policy_check_us:.3f}", f"{s.round_trip_us:.3f}"])
    return buf.getvalue()


def export_csv(samples: list[BenchSample], path: Union[str, Path]) -> None:
    """Write one row per sample ordered by (group, run, request)."""
    text = samples_csv(samples)
    Path(path).write_text(text, encoding="utf-8")


def read_csv(path: Union[str, Path]) -> list[BenchSample]:
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise BenchError(f"{path}: expected header {','.join(CSV_HEADER)}")
    samples = []
    for n, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            group, run, req, check, trip = row
            samples.append(BenchSample(TaskGroup(group), int(run), int(req), float(check), float(trip)))
        except ValueError as exc:
            raise BenchError(f"{path}: line {n}: {exc}") from None
    if not samples:
        raise BenchError(f"{path}: no samples")
    return samples


def coefficient_of_variation(values: list[float]) -> float:
    mean = statistics.fmean(values)
    if mean == 0:
        return 0.0
    return statistics.pstdev(values) / mean

