"""Policy decision point: policy engine gates plus the policy administrator."""

from __future__ import annotations

import csv
import enum
import io
import itertools
import math
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Union

from .core_model import (
    AccessRequest,
    Credential,
    Decision,
    EnterpriseNetwork,
    Reason,
    Resource,
    UserIdentity,
    Verdict,
)
from .policy_store import PolicyRecord, PolicyStore


class TrustEventKind(str, enum.Enum):
    AUTH_SUCCESS = "AuthSuccess"
    AUTH_FAILURE = "AuthFailure"
    BREACH_ATTEMPT = "BreachAttempt"
    INSIDER_FLAG = "InsiderFlag"


@dataclass(frozen=True)
class TrustEvent:
    kind: TrustEventKind
    at: int


@dataclass(frozen=True)
class TrustConfig:
    base_score: float = 0.5
    auth_success_delta: float = 0.1
    auth_failure_delta: float = -0.1
    breach_delta: float = -0.2
    insider_clamp: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.base_score <= 1.0:
            raise ValueError(f"base_score out of [0,1]: {self.base_score}")

    def delta(self, kind: TrustEventKind) -> float:
        return {
            TrustEventKind.AUTH_SUCCESS: self.auth_success_delta,
            TrustEventKind.AUTH_FAILURE: self.auth_failure_delta,
            TrustEventKind.BREACH_ATTEMPT: self.breach_delta,
            TrustEventKind.INSIDER_FLAG: 0.0,
        }[kind]


def compute_trust(events: Iterable[TrustEvent], config: TrustConfig) -> float:
    """Clamp ``base + sum(deltas)`` to [0, 1]; an insider flag zeroes it when clamping is on."""
    events = list(events)
    if config.insider_clamp and any(e.kind is TrustEventKind.INSIDER_FLAG for e in events):
        return 0.0
    # fsum keeps 0.5 + 3 * 0.1 from drifting below 0.8
    total = math.fsum([config.base_score, *(config.delta(e.kind) for e in events)])
    return min(1.0, max(0.0, total))


@dataclass(frozen=True)
class TrustState:
    """Trust of one user inside one enterprise network."""

    user_id: str
    network_id: str
    config: TrustConfig
    events: tuple[TrustEvent, ...] = ()

    @classmethod
    def initial(
        cls, user_id: str, network_id: str, config: TrustConfig, score: Optional[float] = None
    ) -> "TrustState":
        if score is not None:
            config = replace(config, base_score=score)
        return cls(user_id, network_id, config)

    @property
    def score(self) -> float:
        return compute_trust(self.events, self.config)

    def record(self, kind: TrustEventKind, at: int) -> "TrustState":
        return replace(self, events=self.events + (TrustEvent(kind, at),))


@dataclass(frozen=True)
class AccessLogEntry:
    request_id: int
    user_id: str
    network_id: str
    verdict: Verdict
    reason: Reason
    decided_at: int


ACCESS_LOG_HEADER = ("request_id", "user_id", "network_id", "verdict", "reason", "decided_at")


@dataclass
class AccessLog:
    entries: list[AccessLogEntry] = field(default_factory=list)

    def append(self, request: AccessRequest, decision: Decision) -> AccessLogEntry:
        entry = AccessLogEntry(
            request.request_id,
            request.user.user_id,
            request.network_id,
            decision.verdict,
            decision.reason,
            decision.decided_at,
        )
        self.entries.append(entry)
        return entry

    def __len__(self) -> int:
        return len(self.entries)

    def to_csv(self) -> str:
        return access_log_csv(self.entries)


def access_log_csv(entries: Iterable[AccessLogEntry]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ACCESS_LOG_HEADER)
    for e in entries:
        writer.writerow([e.request_id, e.user_id, e.network_id, e.verdict.value, e.reason.value, e.decided_at])
    return buf.getvalue()


# PEP commands


@dataclass(frozen=True)
class Open:
    user_id: str
    resource_id: str


@dataclass(frozen=True)
class CloseAll:
    user_id: str


PepCommand = Union[Open, CloseAll]


def command_pep(decision: Decision, request: AccessRequest) -> PepCommand:
    if decision.granted:
        return Open(request.user.user_id, request.target)
    return CloseAll(request.user.user_id)


def evaluate(
    request: AccessRequest,
    store: PolicyStore,
    trust_state: TrustState,
    network: EnterpriseNetwork,
    at: int,
    *,
    resource: Optional[Resource] = None,
    credentials: Optional[Mapping[str, Iterable[str]]] = None,
) -> Decision:
    """Run the policy-engine gates in order; the first failing gate decides.

    ``credentials`` maps user ids to tokens issued by the administrator. When
    omitted only the credential's issue time is checked. ``resource`` supplies
    the segment used for scope matching; without it only resource ids match.
    """
    segment = resource.segment_id if resource is not None else request.target

    if not store.verify_integrity().intact:
        return Decision.deny(Reason.POLICY_TAMPERED, at)

    policy = store.matching(request.target, segment, at)
    if policy is None:
        return Decision.deny(Reason.NO_POLICY, at)

    if store.modified_since(policy.policy_id, request.issued_at):
        return Decision.deny(Reason.POLICY_MODIFIED_SINCE_REQUEST, at)

    if not _credential_ok(request.user, at, credentials):
        return Decision.deny(Reason.CREDENTIAL_INVALID, at)

    required = policy.condition.required_role
    if required is not None and request.user.role is not required:
        return Decision.deny(Reason.ROLE_MISMATCH, at)

    if trust_state.score < _required_trust(policy, network):
        return Decision.deny(Reason.TRUST_BELOW_THRESHOLD, at)

    return Decision.grant(at)


def _required_trust(policy: PolicyRecord, network: EnterpriseNetwork) -> float:
    if policy.condition.min_trust is None:
        return network.trust_threshold
    return max(network.trust_threshold, policy.condition.min_trust)


def _credential_ok(
    user: UserIdentity, at: int, credentials: Optional[Mapping[str, Iterable[str]]]
) -> bool:
    cred = user.credential
    if cred is None or not cred.valid_at(at):
        return False
    if credentials is None:
        return True
    return cred.token in set(credentials.get(user.user_id, ()))


class UnknownUser(KeyError):
    pass


class UnknownSession(KeyError):
    pass


@dataclass(frozen=True)
class AdminEntry:
    user_id: str
    session_id: str
    at: int
    action: str = "IssueCredential"


class PolicyAdministrator:
    """Issues credentials and per-session ids; keeps an administrative log.

    Tokens come from a per-network RNG seeded by the scenario seed, so runs
    stay reproducible.
    """

    def __init__(self, network_id: str, users: Iterable[str], seed: int = 0):
        self.network_id = network_id
        self.users = set(users)
        self.seed = seed
        self._rng = random.Random(f"{seed}:{network_id}")
        self.issued: dict[str, set[str]] = {}
        self.admin_log: list[AdminEntry] = []
        self._counter = itertools.count(1)

    def issue_credential(self, user: Union[str, UserIdentity], at: int) -> Credential:
        user_id = user.user_id if isinstance(user, UserIdentity) else user
        if user_id not in self.users:
            raise UnknownUser(user_id)
        n = next(self._counter)
        token = f"{self.network_id}:{user_id}:{n}:{self._rng.getrandbits(48):012x}"
        self.issued.setdefault(user_id, set()).add(token)
        self.admin_log.append(AdminEntry(user_id, f"{self.network_id}/s{n}", at))
        return Credential(token, at)


@dataclass(frozen=True)
class Session:
    session_id: str
    request: AccessRequest
    granted_at: int


class PolicyDecisionPoint:
    """PE gates plus PA bookkeeping for one enterprise network."""

    def __init__(self, network: EnterpriseNetwork, administrator: PolicyAdministrator):
        self.network = network
        self.pa = administrator
        self.access_log = AccessLog()
        self.sessions: dict[str, Session] = {}
        self._session_ids = itertools.count(1)

    def evaluate(
        self,
        request: AccessRequest,
        store: PolicyStore,
        trust_state: TrustState,
        at: int,
        *,
        resource: Optional[Resource] = None,
        network: Optional[EnterpriseNetwork] = None,
    ) -> tuple[Decision, Optional[Session]]:
        decision = evaluate(
            request,
            store,
            trust_state,
            network or self.network,
            at,
            resource=resource,
            credentials=self.pa.issued,
        )
        self.access_log.append(request, decision)
        session = None
        if decision.granted:
            session = Session(f"{self.network.network_id}/g{next(self._session_ids)}", request, at)
            self.sessions[session.session_id] = session
        return decision, session

    def reauthenticate(
        self,
        session: Union[str, Session],
        store: PolicyStore,
        trust_state: TrustState,
        at: int,
        *,
        resource: Optional[Resource] = None,
        network: Optional[EnterpriseNetwork] = None,
        user: Optional[UserIdentity] = None,
    ) -> Decision:
        """Re-run every gate for a live session; failures become Revoke.

        ``user`` carries the identity currently presented (it may hold a
        swapped credential); defaults to the identity of the original request.
        """
        sid = session.session_id if isinstance(session, Session) else session
        if sid not in self.sessions:
            raise UnknownSession(sid)
        live = self.sessions[sid]
        request = live.request if user is None else replace(live.request, user=user)
        decision = evaluate(
            request,
            store,
            trust_state,
            network or self.network,
            at,
            resource=resource,
            credentials=self.pa.issued,
        )
        if not decision.granted:
            decision = Decision(Verdict.REVOKE, decision.reason, at)
            del self.sessions[sid]
        self.access_log.append(request, decision)
        return decision
