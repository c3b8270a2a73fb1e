"""Deterministic discrete-event simulator for multi-enterprise zero-trust networks.

Requests flow PEP -> PDP -> PEP with per-hop tick costs. Within one tick,
events run in phase order: control (attacks, PEP fail/recover, policy
edits, trust events), request arrival, PDP decision, re-authentication,
enforcement, data-plane use. Ties inside a phase keep insertion order.
"""

from __future__ import annotations

import csv
import heapq
import io
import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from .core_model import (
    AccessRequest,
    AttackKind,
    Credential,
    Decision,
    DurationStats,
    KpiSnapshot,
    Reason,
    Role,
    UserIdentity,
)
from .decision_point import (
    AccessLogEntry,
    CloseAll,
    PolicyAdministrator,
    PolicyDecisionPoint,
    TrustEventKind,
    TrustState,
    access_log_csv,
    command_pep,
)
from .enforcement_point import EnforcementPoint, ForwardedRequest
from .policy_store import PolicyCondition, PolicyStore
from .scenario import (
    AttackSpec,
    PepControlEvent,
    PolicyModifyEvent,
    ReauthTick,
    RequestEvent,
    ScenarioConfig,
    ScenarioError,
    TrustEventSpec,
    UseEvent,
    ValidatedScenario,
    validate_scenario,
)

CONTROL, ARRIVAL, DECIDE, REAUTH, ENFORCE, USE = range(6)

FLOOD_USER = "__flood__"
FLOOD_RESOURCE = "__flood__"


@dataclass
class _Counters:
    response: list[int] = field(default_factory=list)
    policy_check: list[int] = field(default_factory=list)
    breach_attempts: int = 0
    unauthorized_attempts: int = 0
    offered: int = 0
    served: int = 0
    failover_forwards: int = 0
    log_len: int = 0

    def snapshot(self) -> KpiSnapshot:
        return KpiSnapshot(
            response_time=DurationStats.of(self.response),
            policy_check_time=DurationStats.of(self.policy_check),
            breach_attempts=self.breach_attempts,
            unauthorized_attempts=self.unauthorized_attempts,
            offered_requests=self.offered,
            served_requests=self.served,
            failover_forwards=self.failover_forwards,
            activity_log_len=self.log_len,
        )


@dataclass
class RunReport:
    network_ids: list[str]
    kpi: dict[str, KpiSnapshot]
    access_log: list[AccessLogEntry]
    containment_matrix: list[list[bool]]
    timeline: list[dict[str, Any]]
    seed: int

    def verdict_summary(self) -> str:
        """Last verdict per network, e.g. ``net1 Grant, net2 Deny``."""
        last: dict[str, str] = {}
        for entry in self.access_log:
            last[entry.network_id] = entry.verdict.value
        return ", ".join(f"{n} {last.get(n, '-')}" for n in self.network_ids)

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "networks": self.network_ids,
            "summary": self.verdict_summary(),
            "kpis": {n: kpi_dict(self.kpi[n]) for n in self.network_ids},
            "containment_matrix": self.containment_matrix,
            "access_log": [
                {
                    "request_id": e.request_id,
                    "user_id": e.user_id,
                    "network_id": e.network_id,
                    "verdict": e.verdict.value,
                    "reason": e.reason.value,
                    "decided_at": e.decided_at,
                }
                for e in self.access_log
            ],
            "timeline": self.timeline,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def access_log_csv(self) -> str:
        return access_log_csv(self.access_log)

    def kpi_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(KPI_HEADER)
        for n in self.network_ids:
            d = kpi_dict(self.kpi[n])
            writer.writerow([n] + [_fmt(d[k]) for k in KPI_HEADER[1:]])
        return buf.getvalue()


KPI_HEADER = (
    "network_id",
    "response_time_min",
    "response_time_mean",
    "response_time_max",
    "policy_check_time_min",
    "policy_check_time_mean",
    "policy_check_time_max",
    "breach_attempts",
    "unauthorized_attempts",
    "offered_requests",
    "served_requests",
    "availability",
    "failover_forwards",
    "activity_log_len",
)


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def kpi_dict(k: KpiSnapshot) -> dict[str, Any]:
    return {
        "response_time_min": k.response_time.min,
        "response_time_mean": k.response_time.mean,
        "response_time_max": k.response_time.max,
        "policy_check_time_min": k.policy_check_time.min,
        "policy_check_time_mean": k.policy_check_time.mean,
        "policy_check_time_max": k.policy_check_time.max,
        "breach_attempts": k.breach_attempts,
        "unauthorized_attempts": k.unauthorized_attempts,
        "offered_requests": k.offered_requests,
        "served_requests": k.served_requests,
        "availability": k.availability,
        "failover_forwards": k.failover_forwards,
        "activity_log_len": k.activity_log_len,
    }


def _forged_condition(cond: PolicyCondition) -> PolicyCondition:
    # Privilege escalation: drop role and trust requirements, keep the scope.
    forged = PolicyCondition(None, 0.0, cond.resource_scope or frozenset({"*"}), None)
    if forged == cond:
        forged = PolicyCondition(Role.NORMAL_USER, None, cond.resource_scope, None)
    return forged


class _Simulation:
    def __init__(self, scenario: ValidatedScenario, dropped_networks: frozenset[str] = frozenset()):
        self.sc = scenario
        cfg = scenario.config
        self.cfg = cfg
        self.dropped = dropped_networks
        self.queue: list[tuple] = []
        self._seq = itertools.count()
        self._request_ids = itertools.count(1)
        self.timeline: list[dict[str, Any]] = []
        self.counters = {n: _Counters() for n in scenario.network_ids}
        self.access_log: list[AccessLogEntry] = []

        self.stores: dict[str, PolicyStore] = {n: PolicyStore() for n in scenario.network_ids}

        user_ids = [u.user_id for u in cfg.users]
        self.pdps: dict[str, PolicyDecisionPoint] = {}
        self.peps: dict[str, EnforcementPoint] = {}
        for spec in cfg.networks:
            pa = PolicyAdministrator(spec.network_id, user_ids, cfg.seed)
            self.pdps[spec.network_id] = PolicyDecisionPoint(scenario.networks[spec.network_id], pa)
            for pep_id in spec.peps:
                self.peps[pep_id] = EnforcementPoint(pep_id, spec.pep_capacity)

        self.identities: dict[tuple[str, str], UserIdentity] = {}
        self.trust: dict[tuple[str, str], TrustState] = {}
        self.forged: set[tuple[str, str]] = set()
        self.insiders: set[tuple[str, str]] = set()
        for u in cfg.users:
            for n in scenario.network_ids:
                cred = self.pdps[n].pa.issue_credential(u.user_id, 0)
                self.identities[(u.user_id, n)] = UserIdentity(u.user_id, u.role, cred)
                self.trust[(u.user_id, n)] = TrustState.initial(
                    u.user_id, n, cfg.trust_config, u.trust_in(n)
                )

        # (user, network, resource) -> (session id, pep id)
        self.live: dict[tuple[str, str, str], tuple[str, str]] = {}

    # queue helpers

    def push(self, tick: int, phase: int, kind: str, payload: Any) -> None:
        heapq.heappush(self.queue, (tick, phase, next(self._seq), kind, payload))

    def log(self, tick: int, event: str, **data: Any) -> None:
        self.timeline.append({"tick": tick, "event": event, **data})

    # setup

    def schedule(self) -> None:
        for p in sorted(self.cfg.policies, key=lambda p: p.created_at):
            self.push(p.created_at, CONTROL, "create_policy", p)
        for ev in self.cfg.schedule:
            if isinstance(ev, AttackSpec):
                if self.sc.attack_network(ev) in self.dropped:
                    continue
                self.push(ev.at, CONTROL, "attack", ev)
            elif isinstance(ev, RequestEvent):
                self.push(ev.at, ARRIVAL, "request", (ev.user, ev.network, ev.resource, False))
            elif isinstance(ev, UseEvent):
                self.push(ev.at, USE, "use", ev)
            elif isinstance(ev, (PepControlEvent, PolicyModifyEvent, TrustEventSpec)):
                self.push(ev.at, CONTROL, "control", ev)
            elif isinstance(ev, ReauthTick):
                self.push(ev.at, REAUTH, "reauth_user", ev)

    def run(self) -> None:
        self.schedule()
        while self.queue:
            tick, _phase, _seq, kind, payload = heapq.heappop(self.queue)
            getattr(self, f"_on_{kind}")(tick, payload)

    # control-phase events

    def _on_control(self, t: int, ev: Any) -> None:
        if isinstance(ev, PepControlEvent):
            pep = self.peps[ev.pep]
            pep.fail(t) if ev.action == "fail" else pep.recover(t)
            self.log(t, f"pep_{ev.action}", pep=ev.pep)
        elif isinstance(ev, PolicyModifyEvent):
            net = self.sc.policy_network[ev.policy]
            record = self.stores[net].modify_policy(ev.policy, ev.condition, t)
            self.log(t, "policy_modify", policy=ev.policy, network=net, version=record.version)
        elif isinstance(ev, TrustEventSpec):
            key = (ev.user, ev.network)
            self.trust[key] = self.trust[key].record(ev.kind, t)
            self.log(t, "trust_event", user=ev.user, network=ev.network, kind=ev.kind.value)

    def _on_create_policy(self, t: int, spec: Any) -> None:
        self.stores[spec.network_id].create_policy(spec.condition, t, spec.policy_id)
        self.log(t, "policy_create", policy=spec.policy_id, network=spec.network_id)

    def _on_pep_recover(self, t: int, pep_id: str) -> None:
        self.peps[pep_id].recover(t)
        self.log(t, "pep_recover", pep=pep_id)

    def _on_attack(self, t: int, attack: AttackSpec) -> None:
        kind, target = attack.event.kind, attack.event.target
        net = self.sc.attack_network(attack)
        self.log(
            t, "attack", kind=kind.value, surface=attack.event.surface.value, target=target, network=net
        )
        if kind is AttackKind.POLICY_TAMPER:
            store = self.stores[net]
            cond = attack.condition or _forged_condition(store.get(target).condition)
            store.tamper(target, cond)
        elif kind is AttackKind.DATA_MANIPULATION:
            log = self.stores[net].log
            k = max(i for i, e in enumerate(log.entries) if e.policy_id == target)
            log.entries[k] = replace(log.entries[k], at=log.entries[k].at + 1)
        elif kind is AttackKind.CREDENTIAL_COMPROMISE:
            key = (target, net)
            ident = self.identities[key]
            self.identities[key] = replace(ident, credential=Credential(f"forged:{target}:{net}", t))
            self.forged.add(key)
        elif kind is AttackKind.INSIDER_ACCESS:
            key = (target, net)
            self.trust[key] = self.trust[key].record(TrustEventKind.INSIDER_FLAG, t)
            self.insiders.add(key)
            self.push(t, ARRIVAL, "request", (target, net, attack.resource, False))
        elif kind is AttackKind.DDOS_FLOOD:
            for tick in range(t, t + attack.duration):
                for _ in range(attack.rate):
                    self.push(tick, ARRIVAL, "flood", (target, net))
        elif kind is AttackKind.COMPONENT_FAILURE:
            self.peps[target].fail(t)
            self.log(t, "pep_fail", pep=target)
            self.push(t + attack.duration, CONTROL, "pep_recover", target)

    # request path

    def _new_request(self, t: int, user: UserIdentity, net: str, resource: str) -> AccessRequest:
        return AccessRequest(next(self._request_ids), user, resource, net, t)

    def _on_request(self, t: int, payload: tuple) -> None:
        user_id, net, resource, _ = payload
        request = self._new_request(t, self.identities[(user_id, net)], net, resource)
        c = self.counters[net]
        c.offered += 1
        if (user_id, net) in self.forged or (user_id, net) in self.insiders:
            c.breach_attempts += 1
        self.log(t, "request", request_id=request.request_id, user=user_id, network=net, resource=resource)

        spec = self.sc.network_spec(net)
        candidates = spec.peps if spec.backup else spec.peps[:1]
        for hop, pep_id in enumerate(candidates):
            result = self.peps[pep_id].intercept(request, t)
            if isinstance(result, ForwardedRequest):
                c.served += 1
                c.failover_forwards += hop
                self.log(t, "forward", request_id=request.request_id, pep=pep_id)
                self.push(t + self.cfg.latency.pep_to_pdp + self.cfg.latency.pdp_check, DECIDE, "decide",
                          (result, t + self.cfg.latency.pep_to_pdp))
                return
            self._unavailable(t, pep_id, result.overload, request.request_id)
        self.log(t, "unavailable", request_id=request.request_id, network=net)

    def _on_flood(self, t: int, payload: tuple) -> None:
        pep_id, net = payload
        ident = UserIdentity(FLOOD_USER, Role.NORMAL_USER, None)
        request = self._new_request(t, ident, net, FLOOD_RESOURCE)
        c = self.counters[net]
        c.offered += 1
        c.breach_attempts += 1
        result = self.peps[pep_id].intercept(request, t)
        if isinstance(result, ForwardedRequest):
            c.served += 1
            self.push(t + self.cfg.latency.pep_to_pdp + self.cfg.latency.pdp_check, DECIDE, "decide",
                      (result, t + self.cfg.latency.pep_to_pdp))
        else:
            self._unavailable(t, pep_id, result.overload, request.request_id)

    def _unavailable(self, t: int, pep_id: str, overload: bool, request_id: int) -> None:
        if overload:
            net = self.sc.pep_network[pep_id]
            cooldown = self.sc.network_spec(net).ddos_cooldown
            self.log(t, "pep_overload", pep=pep_id, request_id=request_id)
            self.push(t + cooldown, CONTROL, "pep_recover", pep_id)

    def _context(self, net: str, resource_id: str):
        resource = self.sc.resources.get(resource_id)
        owner = resource.network_id if resource is not None else net
        return resource, self.stores[owner], self.sc.networks[owner]

    def _on_decide(self, t: int, payload: tuple) -> None:
        fwd, received_at = payload
        request: AccessRequest = fwd.request
        net = request.network_id
        resource, store, owner_net = self._context(net, request.target)
        pdp = self.pdps[net]
        trust = self.trust.get((request.user.user_id, net))
        if trust is None:
            trust = TrustState.initial(request.user.user_id, net, self.cfg.trust_config, 0.0)
        decision, session = pdp.evaluate(request, store, trust, t, resource=resource, network=owner_net)
        self._record(request, decision)
        c = self.counters[net]
        c.policy_check.append(t - received_at)
        self.log(
            t,
            "decision",
            request_id=request.request_id,
            network=net,
            verdict=decision.verdict.value,
            reason=decision.reason.value,
        )
        key = (request.user.user_id, net)
        if decision.reason is Reason.CREDENTIAL_INVALID and key in self.trust:
            self.trust[key] = self.trust[key].record(TrustEventKind.BREACH_ATTEMPT, t)
        if decision.granted:
            live_key = (request.user.user_id, net, request.target)
            self.live[live_key] = (session.session_id, fwd.pep_id)
            self._schedule_reauth(t, session.session_id, live_key)
        else:
            self._drop_sessions(request.user.user_id, net)
        self.push(t + self.cfg.latency.pdp_to_pep, ENFORCE, "enforce",
                  (fwd.pep_id, command_pep(decision, request), request))

    def _record(self, request: AccessRequest, decision: Decision) -> None:
        entry = self.pdps[request.network_id].access_log.entries[-1]
        self.access_log.append(entry)
        self.counters[request.network_id].log_len += 1

    def _drop_sessions(self, user_id: str, net: str) -> None:
        pdp = self.pdps[net]
        for key in [k for k in self.live if k[0] == user_id and k[1] == net]:
            sid, _ = self.live.pop(key)
            pdp.sessions.pop(sid, None)

    def _schedule_reauth(self, t: int, session_id: str, live_key: tuple) -> None:
        period = self.cfg.reauth_period
        if period > 0 and t + period <= self.sc.horizon:
            self.push(t + period, REAUTH, "reauth", (session_id, live_key))

    def _on_reauth(self, t: int, payload: tuple) -> None:
        session_id, live_key = payload
        if self.live.get(live_key, (None,))[0] != session_id:
            return
        self._reauthenticate(t, session_id, live_key)

    def _on_reauth_user(self, t: int, ev: ReauthTick) -> None:
        for key, (sid, _) in sorted(self.live.items()):
            if key[0] == ev.user and key[1] == ev.network:
                if self.live.get(key, (None,))[0] == sid:
                    self._reauthenticate(t, sid, key)

    def _reauthenticate(self, t: int, session_id: str, live_key: tuple) -> None:
        user_id, net, resource_id = live_key
        pep_id = self.live[live_key][1]
        resource, store, owner_net = self._context(net, resource_id)
        pdp = self.pdps[net]
        decision = pdp.reauthenticate(
            session_id,
            store,
            self.trust[(user_id, net)],
            t,
            resource=resource,
            network=owner_net,
            user=self.identities[(user_id, net)],
        )
        request = pdp.access_log.entries[-1]
        self.access_log.append(request)
        self.counters[net].log_len += 1
        self.log(
            t,
            "reauth",
            request_id=request.request_id,
            network=net,
            session=session_id,
            verdict=decision.verdict.value,
            reason=decision.reason.value,
        )
        if decision.granted:
            self._schedule_reauth(t, session_id, live_key)
        else:
            self.live.pop(live_key, None)
            self._drop_sessions(user_id, net)
            self.push(t + self.cfg.latency.pdp_to_pep, ENFORCE, "enforce", (pep_id, CloseAll(user_id), None))

    def _on_enforce(self, t: int, payload: tuple) -> None:
        pep_id, command, request = payload
        self.peps[pep_id].enforce(command)
        data: dict[str, Any] = {"pep": pep_id, "command": type(command).__name__, "user": command.user_id}
        if request is not None:
            data["request_id"] = request.request_id
            if request.user.user_id != FLOOD_USER:
                self.counters[request.network_id].response.append(t - request.issued_at)
        self.log(t, "enforce", **data)

    def _on_use(self, t: int, ev: UseEvent) -> None:
        spec = self.sc.network_spec(ev.network)
        ok = any((ev.user, ev.resource) in self.peps[p].open_channels for p in spec.peps)
        if not ok:
            self.counters[ev.network].unauthorized_attempts += 1
            # PEP-level counter for the primary, mirrors the KPI
            self.peps[spec.peps[0]].unauthorized_attempts += 1
        self.log(t, "use", user=ev.user, network=ev.network, resource=ev.resource, allowed=ok)

    # results

    def signature(self, net: str) -> tuple:
        decisions = tuple(
            (e.user_id, e.verdict.value, e.reason.value, e.decided_at)
            for e in self.access_log
            if e.network_id == net
        )
        return decisions, self.counters[net].snapshot()


def _ensure_valid(scenario: ScenarioConfig | ValidatedScenario) -> ValidatedScenario:
    if isinstance(scenario, ValidatedScenario):
        return scenario
    return validate_scenario(scenario)


def _execute(sc: ValidatedScenario, with_containment: bool) -> tuple[RunReport, _Simulation]:
    sim = _Simulation(sc)
    sim.run()

    nets = sc.network_ids
    matrix = [[False] * len(nets) for _ in nets]
    if with_containment:
        attacked = {sc.attack_network(ev) for ev in sc.config.schedule if isinstance(ev, AttackSpec)}
        for i, src in enumerate(nets):
            if src not in attacked:
                continue
            matrix[i][i] = True
            # Counterfactual: the same run without this network's attacks.
            counterfactual = _Simulation(sc, frozenset({src}))
            counterfactual.run()
            for j, dst in enumerate(nets):
                if j != i and sim.signature(dst) != counterfactual.signature(dst):
                    matrix[i][j] = True

    report = RunReport(
        network_ids=nets,
        kpi={n: sim.counters[n].snapshot() for n in nets},
        access_log=list(sim.access_log),
        containment_matrix=matrix,
        timeline=sim.timeline,
        seed=sc.config.seed,
    )
    return report, sim


def run(scenario: ScenarioConfig | ValidatedScenario, *, with_containment: bool = True) -> RunReport:
    """Simulate a scenario; identical input gives an identical report."""
    return _execute(_ensure_valid(scenario), with_containment)[0]


def simulate(
    scenario: ScenarioConfig | ValidatedScenario, *, with_containment: bool = True
) -> tuple[RunReport, _Simulation]:
    """Like ``run`` but also hands back the final simulator state (PEPs, stores, trust)."""
    return _execute(_ensure_valid(scenario), with_containment)


def inject(
    scenario: ScenarioConfig,
    attack: AttackSpec | Any,
    **params: Any,
) -> ScenarioConfig:
    """Return a copy of the scenario with the attack placed in the schedule.

    ``attack`` may be an ``AttackSpec`` or a bare ``AttackEvent`` plus
    keyword parameters (network, duration, rate, resource, condition).
    """
    spec = attack if isinstance(attack, AttackSpec) else AttackSpec(attack, **params)
    schedule = list(scenario.schedule)
    # after every event at the same tick, so insertion is stable
    index = next((i for i, ev in enumerate(schedule) if ev.at > spec.at), len(schedule))
    schedule.insert(index, spec)
    injected = replace(scenario, schedule=tuple(schedule))
    try:
        validate_scenario(injected)
    except ScenarioError as exc:
        bad = [e for e in exc.errors if spec.event.target in e or spec.event.kind.value in e]
        raise ScenarioError(bad or exc.errors) from None
    return injected


def containment(report: RunReport) -> list[list[bool]]:
    return report.containment_matrix


def kpis(report: RunReport, network_id: str) -> KpiSnapshot:
    try:
        return report.kpi[network_id]
    except KeyError:
        raise KeyError(f"unknown network {network_id!r}") from None
