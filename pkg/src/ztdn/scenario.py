"""Scenario configuration: file format, serialization and validation.

A scenario is a YAML mapping. See ``docs/scenario-format.md`` for the full
schema; the short version::

    seed: 7
    reauth_period: 5          # ticks, 0 disables re-authentication
    horizon: 40               # last tick simulated (default: last event)
    latency: {pep_to_pdp: 1, pdp_check: 0, pdp_to_pep: 1}
    trust: {base_score: 0.5, breach_delta: -0.2, insider_clamp: true}
    networks:
      - {id: net1, trust_threshold: 0.7, segments: [s1], peps: [pep1]}
    users:
      - {id: alice, role: NormalUser, trust: {net1: 0.8}}
    resources:
      - {id: r1, segment: s1, network: net1}
    policies:
      - {id: p1, network: net1, scope: [s1]}
    schedule:
      - {at: 1, type: request, user: alice, network: net1, resource: r1}
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Any, Optional, Union

from . import _yaml
from ._yaml import ParseError
from .core_model import (
    ATTACK_SURFACES,
    DEFAULT_SURFACE,
    AttackEvent,
    AttackKind,
    AttackSurface,
    EnterpriseNetwork,
    Resource,
    Role,
)
from .decision_point import TrustConfig, TrustEventKind
from .policy_store import PolicyCondition


class ScenarioError(ParseError):
    """Structural or semantic problems with a scenario; never partially accepted."""


@dataclass(frozen=True)
class NetworkSpec:
    network_id: str
    trust_threshold: float
    segments: tuple[str, ...] = ()
    peps: tuple[str, ...] = ()
    backup: bool = False
    pep_capacity: Optional[int] = None
    ddos_cooldown: int = 3
    line: int = field(default=0, compare=False)

    def network(self) -> EnterpriseNetwork:
        return EnterpriseNetwork(self.network_id, self.trust_threshold, frozenset(self.segments), self.peps)


@dataclass(frozen=True)
class UserSpec:
    user_id: str
    role: Role
    trust: tuple[tuple[str, float], ...] = ()
    line: int = field(default=0, compare=False)

    def trust_in(self, network_id: str) -> Optional[float]:
        return dict(self.trust).get(network_id)


@dataclass(frozen=True)
class ResourceSpec:
    resource_id: str
    segment_id: str
    network_id: str
    shared: bool = False
    line: int = field(default=0, compare=False)

    def resource(self) -> Resource:
        return Resource(self.resource_id, self.segment_id, self.network_id, self.shared)


@dataclass(frozen=True)
class PolicySpec:
    policy_id: str
    network_id: str
    condition: PolicyCondition
    created_at: int = 0
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class LatencyModel:
    pep_to_pdp: int = 0
    pdp_check: int = 0
    pdp_to_pep: int = 0


# schedule entries


@dataclass(frozen=True)
class RequestEvent:
    at: int
    user: str
    network: str
    resource: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class UseEvent:
    """Data-plane use of an already opened channel."""

    at: int
    user: str
    network: str
    resource: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class PepControlEvent:
    at: int
    pep: str
    action: str  # "fail" | "recover"
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class PolicyModifyEvent:
    at: int
    policy: str
    condition: PolicyCondition
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class TrustEventSpec:
    at: int
    user: str
    network: str
    kind: TrustEventKind
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ReauthTick:
    at: int
    user: str
    network: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class AttackSpec:
    """An attack plus the parameters its injection needs.

    ``target`` is a policy id (PolicyTamper, DataManipulation), a PEP id
    (DDoSFlood, ComponentFailure) or a user id (CredentialCompromise,
    InsiderAccess). ``network`` scopes user-targeted attacks.
    """

    event: AttackEvent
    network: Optional[str] = None
    duration: int = 1
    rate: int = 0
    resource: Optional[str] = None
    condition: Optional[PolicyCondition] = None
    line: int = field(default=0, compare=False)

    @property
    def at(self) -> int:
        return self.event.at


ScheduleEvent = Union[
    RequestEvent, UseEvent, PepControlEvent, PolicyModifyEvent, TrustEventSpec, ReauthTick, AttackSpec
]


@dataclass(frozen=True)
class ScenarioConfig:
    networks: tuple[NetworkSpec, ...] = ()
    users: tuple[UserSpec, ...] = ()
    resources: tuple[ResourceSpec, ...] = ()
    policies: tuple[PolicySpec, ...] = ()
    schedule: tuple[ScheduleEvent, ...] = ()
    trust_config: TrustConfig = TrustConfig()
    reauth_period: int = 0
    latency: LatencyModel = LatencyModel()
    seed: int = 0
    horizon: Optional[int] = None

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=seed)


# parsing


class _Reader:
    """Pulls typed fields out of one mapping, collecting errors."""

    def __init__(self, data: Any, where: str, errors: list[str], line: int = 0):
        self.line = _yaml.line_of(data, line)
        self.where = where
        self.errors = errors
        self.ok = isinstance(data, dict)
        self.data = data if self.ok else {}
        self.used: set[str] = set()
        if not self.ok:
            self.error(f"{where} must be a mapping")

    def error(self, msg: str) -> None:
        self.errors.append(f"line {self.line}: {msg}")

    def get(self, key: str, kind: type | tuple[type, ...], default: Any = ..., *, nullable: bool = False) -> Any:
        self.used.add(key)
        if key not in self.data:
            if default is ...:
                if self.ok:
                    self.error(f"{self.where}: missing field {key!r}")
                return None
            return default
        value = self.data[key]
        if value is None and nullable:
            return None
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if isinstance(value, bool) and kind in (int, float):
            self.error(f"{self.where}: field {key!r} must be {kind.__name__}")
            return None if default is ... else default
        if not isinstance(value, kind):
            name = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
            self.error(f"{self.where}: field {key!r} must be {name}, got {type(value).__name__}")
            return None if default is ... else default
        return value

    def strings(self, key: str, default: Any = ()) -> tuple[str, ...]:
        value = self.get(key, list, list(default))
        if value is None:
            return ()
        if not all(isinstance(v, str) for v in value):
            self.error(f"{self.where}: field {key!r} must be a list of strings")
            return ()
        return tuple(value)

    def finish(self) -> None:
        extra = sorted(set(self.data) - self.used)
        if extra:
            self.error(f"{self.where}: unknown field(s) {', '.join(map(str, extra))}")


def _condition(r: _Reader, data: dict) -> Optional[PolicyCondition]:
    role = r.get("required_role", str, None, nullable=True)
    min_trust = r.get("min_trust", float, None, nullable=True)
    scope = r.strings("scope")
    window = r.get("valid_window", list, None, nullable=True)
    try:
        if window is not None:
            if len(window) != 2 or not all(isinstance(x, int) for x in window):
                raise ValueError("valid_window must be [start, end] integers")
            window = (window[0], window[1])
        if role is not None:
            role = Role(role)
        return PolicyCondition(role, min_trust, frozenset(scope), window)
    except ValueError as exc:
        r.error(f"{r.where}: {exc}")
        return None


def _parse_event(raw: Any, index: int, errors: list[str], line: int) -> Optional[ScheduleEvent]:
    n_errors = len(errors)
    r = _Reader(raw, f"schedule[{index}]", errors, line)
    if not r.ok:
        return None
    at = r.get("at", int)
    kind = r.get("type", str)
    event: Optional[ScheduleEvent] = None
    ln = r.line
    if kind in ("request", "use"):
        cls = RequestEvent if kind == "request" else UseEvent
        event = cls(at, r.get("user", str), r.get("network", str), r.get("resource", str), ln)
    elif kind in ("fail", "recover"):
        event = PepControlEvent(at, r.get("pep", str), kind, ln)
    elif kind == "modify_policy":
        policy = r.get("policy", str)
        cond_raw = r.get("condition", dict)
        cond = _sub_condition(cond_raw, r) if cond_raw is not None else None
        event = PolicyModifyEvent(at, policy, cond, ln)
    elif kind == "trust_event":
        user, net, tk = r.get("user", str), r.get("network", str), r.get("kind", str)
        try:
            tk = TrustEventKind(tk) if tk is not None else None
        except ValueError:
            r.error(f"unknown trust event kind {tk!r}")
        event = TrustEventSpec(at, user, net, tk, ln)
    elif kind == "reauth":
        event = ReauthTick(at, r.get("user", str), r.get("network", str), ln)
    elif kind == "attack":
        event = _parse_attack(r, at)
    elif kind is not None:
        r.error(f"unknown schedule event type {kind!r}")
    r.finish()
    if event is None or at is None or len(errors) > n_errors:
        return None
    if at < 0:
        r.error("event time must be >= 0")
        return None
    return event


def _sub_condition(data: Any, parent: _Reader) -> Optional[PolicyCondition]:
    sub = _Reader(data, f"{parent.where}.condition", parent.errors, parent.line)
    cond = _condition(sub, data)
    sub.finish()
    return cond


def _parse_attack(r: _Reader, at: Optional[int]) -> Optional[AttackSpec]:
    kind_raw = r.get("kind", str)
    target = r.get("target", str)
    surface_raw = r.get("surface", str, None)
    network = r.get("network", str, None)
    duration = r.get("duration", int, 1)
    rate = r.get("rate", int, 0)
    resource = r.get("resource", str, None)
    cond_raw = r.get("condition", dict, None)
    condition = None
    if cond_raw is not None:
        condition = _sub_condition(cond_raw, r)
    try:
        kind = AttackKind(kind_raw)
        surface = AttackSurface(surface_raw) if surface_raw is not None else DEFAULT_SURFACE[kind]
        if surface not in ATTACK_SURFACES[kind]:
            raise ValueError(f"attack {kind.value} cannot use surface {surface.value}")
        if at is None or target is None:
            return None
        return AttackSpec(
            AttackEvent(surface, kind, at, target), network, duration, rate, resource, condition, r.line
        )
    except (ValueError, KeyError) as exc:
        r.error(f"{r.where}: {exc}")
        return None


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse scenario YAML into a ScenarioConfig (structure only, no cross-references)."""
    data = _yaml.load(text)
    errors: list[str] = []
    if data is None:
        data = _yaml.LineDict()
    top = _Reader(data, "scenario", errors, 1)
    if not top.ok:
        raise ScenarioError(errors)

    networks = []
    for i, raw in enumerate(top.get("networks", list, [])):
        r = _Reader(raw, f"networks[{i}]", errors, top.line)
        if r.ok:
            networks.append(
                NetworkSpec(
                    r.get("id", str),
                    r.get("trust_threshold", float),
                    r.strings("segments"),
                    r.strings("peps"),
                    r.get("backup", bool, False),
                    r.get("pep_capacity", int, None, nullable=True),
                    r.get("ddos_cooldown", int, 3),
                    r.line,
                )
            )
            r.finish()

    users = []
    for i, raw in enumerate(top.get("users", list, [])):
        r = _Reader(raw, f"users[{i}]", errors, top.line)
        if not r.ok:
            continue
        uid = r.get("id", str)
        role = r.get("role", str, Role.NORMAL_USER.value)
        trust_raw = r.get("trust", dict, {})
        trust = []
        for net, score in (trust_raw or {}).items():
            if isinstance(score, bool) or not isinstance(score, (int, float)):
                r.error(f"users[{i}]: trust for {net!r} must be a number")
                continue
            trust.append((str(net), float(score)))
        try:
            role = Role(role) if role is not None else None
        except ValueError:
            r.error(f"users[{i}]: role must be Administrator or NormalUser, got {role!r}")
            role = None
        r.finish()
        users.append(UserSpec(uid, role, tuple(trust), r.line))

    resources = []
    for i, raw in enumerate(top.get("resources", list, [])):
        r = _Reader(raw, f"resources[{i}]", errors, top.line)
        if r.ok:
            resources.append(
                ResourceSpec(
                    r.get("id", str), r.get("segment", str), r.get("network", str),
                    r.get("shared", bool, False), r.line,
                )
            )
            r.finish()

    policies = []
    for i, raw in enumerate(top.get("policies", list, [])):
        r = _Reader(raw, f"policies[{i}]", errors, top.line)
        if r.ok:
            pid, net = r.get("id", str), r.get("network", str)
            created = r.get("created_at", int, 0)
            cond = _condition(r, raw)
            r.finish()
            policies.append(PolicySpec(pid, net, cond, created, r.line))

    schedule = []
    for i, raw in enumerate(top.get("schedule", list, [])):
        event = _parse_event(raw, i, errors, top.line)
        if event is not None:
            schedule.append(event)

    trust_raw = top.get("trust", dict, {})
    tr = _Reader(trust_raw if trust_raw is not None else {}, "trust", errors, top.line)
    defaults = TrustConfig()
    trust_kwargs = {
        "base_score": tr.get("base_score", float, defaults.base_score),
        "auth_success_delta": tr.get("auth_success_delta", float, defaults.auth_success_delta),
        "auth_failure_delta": tr.get("auth_failure_delta", float, defaults.auth_failure_delta),
        "breach_delta": tr.get("breach_delta", float, defaults.breach_delta),
        "insider_clamp": tr.get("insider_clamp", bool, defaults.insider_clamp),
    }
    tr.finish()
    trust_config = defaults
    try:
        if None not in trust_kwargs.values():
            trust_config = TrustConfig(**trust_kwargs)
    except ValueError as exc:
        tr.error(f"trust: {exc}")

    lat_raw = top.get("latency", dict, {})
    lr = _Reader(lat_raw if lat_raw is not None else {}, "latency", errors, top.line)
    latency = LatencyModel(
        lr.get("pep_to_pdp", int, 0), lr.get("pdp_check", int, 0), lr.get("pdp_to_pep", int, 0)
    )
    lr.finish()
    if any(v is not None and v < 0 for v in (latency.pep_to_pdp, latency.pdp_check, latency.pdp_to_pep)):
        lr.error("latency: hop costs must be >= 0")

    config = ScenarioConfig(
        networks=tuple(networks),
        users=tuple(users),
        resources=tuple(resources),
        policies=tuple(policies),
        schedule=tuple(schedule),
        trust_config=trust_config,
        reauth_period=top.get("reauth_period", int, 0),
        latency=latency,
        seed=top.get("seed", int, 0),
        horizon=top.get("horizon", int, None, nullable=True),
    )
    top.finish()
    if errors:
        raise ScenarioError(errors)
    return config


def load_scenario(path: str) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# serialization


def _condition_dict(cond: PolicyCondition) -> dict:
    out: dict[str, Any] = {}
    if cond.required_role is not None:
        out["required_role"] = cond.required_role.value
    if cond.min_trust is not None:
        out["min_trust"] = cond.min_trust
    if cond.resource_scope:
        out["scope"] = sorted(cond.resource_scope)
    if cond.valid_window is not None:
        out["valid_window"] = list(cond.valid_window)
    return out


def _event_dict(ev: ScheduleEvent) -> dict:
    if isinstance(ev, RequestEvent):
        return {"at": ev.at, "type": "request", "user": ev.user, "network": ev.network, "resource": ev.resource}
    if isinstance(ev, UseEvent):
        return {"at": ev.at, "type": "use", "user": ev.user, "network": ev.network, "resource": ev.resource}
    if isinstance(ev, PepControlEvent):
        return {"at": ev.at, "type": ev.action, "pep": ev.pep}
    if isinstance(ev, PolicyModifyEvent):
        return {"at": ev.at, "type": "modify_policy", "policy": ev.policy, "condition": _condition_dict(ev.condition)}
    if isinstance(ev, TrustEventSpec):
        return {"at": ev.at, "type": "trust_event", "user": ev.user, "network": ev.network, "kind": ev.kind.value}
    if isinstance(ev, ReauthTick):
        return {"at": ev.at, "type": "reauth", "user": ev.user, "network": ev.network}
    if isinstance(ev, AttackSpec):
        out = {
            "at": ev.at,
            "type": "attack",
            "kind": ev.event.kind.value,
            "surface": ev.event.surface.value,
            "target": ev.event.target,
        }
        if ev.network is not None:
            out["network"] = ev.network
        if ev.duration != 1:
            out["duration"] = ev.duration
        if ev.rate:
            out["rate"] = ev.rate
        if ev.resource is not None:
            out["resource"] = ev.resource
        if ev.condition is not None:
            out["condition"] = _condition_dict(ev.condition)
        return out
    raise TypeError(f"unknown schedule event {ev!r}")


def scenario_to_dict(config: ScenarioConfig) -> dict:
    tc = config.trust_config
    out: dict[str, Any] = {
        "seed": config.seed,
        "reauth_period": config.reauth_period,
    }
    if config.horizon is not None:
        out["horizon"] = config.horizon
    out["latency"] = {
        "pep_to_pdp": config.latency.pep_to_pdp,
        "pdp_check": config.latency.pdp_check,
        "pdp_to_pep": config.latency.pdp_to_pep,
    }
    out["trust"] = {f.name: getattr(tc, f.name) for f in fields(tc)}
    out["networks"] = [
        {
            "id": n.network_id,
            "trust_threshold": n.trust_threshold,
            "segments": list(n.segments),
            "peps": list(n.peps),
            "backup": n.backup,
            "pep_capacity": n.pep_capacity,
            "ddos_cooldown": n.ddos_cooldown,
        }
        for n in config.networks
    ]
    out["users"] = [
        {"id": u.user_id, "role": u.role.value, "trust": dict(u.trust)} for u in config.users
    ]
    out["resources"] = [
        {"id": r.resource_id, "segment": r.segment_id, "network": r.network_id, "shared": r.shared}
        for r in config.resources
    ]
    out["policies"] = [
        {"id": p.policy_id, "network": p.network_id, **_condition_dict(p.condition), "created_at": p.created_at}
        for p in config.policies
    ]
    out["schedule"] = [_event_dict(ev) for ev in config.schedule]
    return out


def serialize_scenario(config: ScenarioConfig) -> str:
    return _yaml.dump(scenario_to_dict(config))


# validation


@dataclass(frozen=True)
class ValidatedScenario:
    config: ScenarioConfig
    networks: dict[str, EnterpriseNetwork]
    resources: dict[str, Resource]
    pep_network: dict[str, str]
    policy_network: dict[str, str]
    horizon: int

    @property
    def network_ids(self) -> list[str]:
        return [n.network_id for n in self.config.networks]

    def network_spec(self, network_id: str) -> NetworkSpec:
        for spec in self.config.networks:
            if spec.network_id == network_id:
                return spec
        raise KeyError(network_id)

    def user(self, user_id: str) -> UserSpec:
        for spec in self.config.users:
            if spec.user_id == user_id:
                return spec
        raise KeyError(user_id)

    def attack_network(self, attack: AttackSpec) -> str:
        kind = attack.event.kind
        if kind in (AttackKind.POLICY_TAMPER, AttackKind.DATA_MANIPULATION):
            return self.policy_network[attack.event.target]
        if kind in (AttackKind.DDOS_FLOOD, AttackKind.COMPONENT_FAILURE):
            return self.pep_network[attack.event.target]
        assert attack.network is not None
        return attack.network


def _dupes(ids: list[str]) -> list[str]:
    seen, dup = set(), []
    for x in ids:
        if x in seen and x not in dup:
            dup.append(x)
        seen.add(x)
    return dup


def _event_end(ev: ScheduleEvent) -> int:
    if isinstance(ev, AttackSpec) and ev.event.kind in (AttackKind.COMPONENT_FAILURE, AttackKind.DDOS_FLOOD):
        return ev.at + max(ev.duration, 1)
    return ev.at


def validate_scenario(config: ScenarioConfig) -> ValidatedScenario:
    """Check references, ranges and uniqueness. Raises ScenarioError listing every violation."""
    errors: list[str] = []

    def err(line: int, msg: str) -> None:
        errors.append(f"line {line}: {msg}" if line else msg)

    if not config.networks:
        err(0, "at least one network required")

    for dup in _dupes([n.network_id for n in config.networks]):
        err(0, f"duplicate network id {dup!r}")
    for dup in _dupes([u.user_id for u in config.users]):
        err(0, f"duplicate user id {dup!r}")
    for dup in _dupes([r.resource_id for r in config.resources]):
        err(0, f"duplicate resource id {dup!r}")
    for dup in _dupes([p.policy_id for p in config.policies]):
        err(0, f"duplicate policy id {dup!r}")
    for dup in _dupes([pep for n in config.networks for pep in n.peps]):
        err(0, f"duplicate PEP id {dup!r}")

    segment_owner: dict[str, str] = {}
    pep_network: dict[str, str] = {}
    networks: dict[str, EnterpriseNetwork] = {}
    for n in config.networks:
        if not 0.0 <= n.trust_threshold <= 1.0:
            err(n.line, f"{n.network_id}: threshold out of [0,1]: {n.trust_threshold}")
        if not n.peps:
            err(n.line, f"{n.network_id}: at least one PEP required")
        if n.pep_capacity is not None and n.pep_capacity < 1:
            err(n.line, f"{n.network_id}: pep_capacity must be >= 1")
        if n.ddos_cooldown < 1:
            err(n.line, f"{n.network_id}: ddos_cooldown must be >= 1")
        for seg in n.segments:
            if seg in segment_owner and segment_owner[seg] != n.network_id:
                err(n.line, f"segment {seg!r} belongs to both {segment_owner[seg]} and {n.network_id}")
            segment_owner.setdefault(seg, n.network_id)
        for pep in n.peps:
            pep_network.setdefault(pep, n.network_id)
        if 0.0 <= n.trust_threshold <= 1.0:
            networks[n.network_id] = n.network()

    users = {u.user_id: u for u in config.users}
    for u in config.users:
        for net, score in u.trust:
            if net not in networks:
                err(u.line, f"user {u.user_id}: unknown network {net!r}")
            if not 0.0 <= score <= 1.0:
                err(u.line, f"user {u.user_id}: trust for {net} out of [0,1]: {score}")

    resources: dict[str, Resource] = {}
    for r in config.resources:
        if r.network_id not in networks:
            err(r.line, f"resource {r.resource_id}: unknown network {r.network_id!r}")
        elif segment_owner.get(r.segment_id) != r.network_id:
            err(r.line, f"resource {r.resource_id}: segment {r.segment_id!r} is not in {r.network_id}")
        resources[r.resource_id] = r.resource()

    policy_network: dict[str, str] = {}
    for p in config.policies:
        if p.network_id not in networks:
            err(p.line, f"policy {p.policy_id}: unknown network {p.network_id!r}")
        if p.condition is None:
            continue
        for ref in p.condition.resource_scope:
            owner = resources[ref].network_id if ref in resources else segment_owner.get(ref)
            if owner is None:
                err(p.line, f"policy {p.policy_id}: unknown scope entry {ref!r}")
            elif owner != p.network_id:
                err(p.line, f"policy {p.policy_id}: scope entry {ref!r} belongs to {owner}")
        if p.created_at < 0:
            err(p.line, f"policy {p.policy_id}: created_at must be >= 0")
        policy_network[p.policy_id] = p.network_id

    def check_access(line: int, user: str, net: str, res: str) -> None:
        if user not in users:
            err(line, f"unknown user {user!r}")
        if net not in networks:
            err(line, f"unknown network {net!r}")
        if res not in resources:
            err(line, f"unknown resource {res!r}")
        elif net in networks:
            target = resources[res]
            if target.network_id != net and not target.shared:
                err(line, f"resource {res!r} is not reachable from {net} (not shared)")

    last = -1
    for ev in config.schedule:
        if ev.at < last:
            err(ev.line, f"schedule not sorted by time at t={ev.at}")
        last = max(last, ev.at)
        if isinstance(ev, (RequestEvent, UseEvent)):
            check_access(ev.line, ev.user, ev.network, ev.resource)
        elif isinstance(ev, PepControlEvent):
            if ev.pep not in pep_network:
                err(ev.line, f"unknown PEP {ev.pep!r}")
        elif isinstance(ev, PolicyModifyEvent):
            if ev.policy not in policy_network:
                err(ev.line, f"unknown policy {ev.policy!r}")
        elif isinstance(ev, (TrustEventSpec, ReauthTick)):
            if ev.user not in users:
                err(ev.line, f"unknown user {ev.user!r}")
            if ev.network not in networks:
                err(ev.line, f"unknown network {ev.network!r}")
        elif isinstance(ev, AttackSpec):
            _validate_attack(ev, err, users, networks, resources, pep_network, policy_network)

    if config.reauth_period < 0:
        err(0, "reauth_period must be >= 0")

    if errors:
        raise ScenarioError(errors)

    horizon = config.horizon
    if horizon is None:
        lat = config.latency
        tail = lat.pep_to_pdp + lat.pdp_check + lat.pdp_to_pep
        horizon = max((_event_end(ev) for ev in config.schedule), default=0) + tail
    return ValidatedScenario(config, networks, resources, pep_network, policy_network, horizon)


def _validate_attack(ev, err, users, networks, resources, pep_network, policy_network) -> None:
    kind, target = ev.event.kind, ev.event.target
    if kind in (AttackKind.POLICY_TAMPER, AttackKind.DATA_MANIPULATION):
        if target not in policy_network:
            err(ev.line, f"{kind.value}: unknown policy {target!r}")
    elif kind in (AttackKind.DDOS_FLOOD, AttackKind.COMPONENT_FAILURE):
        if target not in pep_network:
            err(ev.line, f"{kind.value}: unknown PEP {target!r}")
        if ev.duration < 1:
            err(ev.line, f"{kind.value}: duration must be >= 1")
        if kind is AttackKind.DDOS_FLOOD and ev.rate < 1:
            err(ev.line, "DDoSFlood: rate must be >= 1")
    else:
        if target not in users:
            err(ev.line, f"{kind.value}: unknown user {target!r}")
        if ev.network not in networks:
            err(ev.line, f"{kind.value}: network required, got {ev.network!r}")
        if kind is AttackKind.INSIDER_ACCESS:
            if ev.resource not in resources:
                err(ev.line, f"InsiderAccess: unknown resource {ev.resource!r}")
