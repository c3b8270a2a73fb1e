"""Shared domain vocabulary for the zero-trust network toolkit.

Every type here is an immutable value. Logical time is an integer tick
owned by the simulator; nothing in this module reads the wall clock.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional


class Role(str, enum.Enum):
    ADMINISTRATOR = "Administrator"
    NORMAL_USER = "NormalUser"


class Verdict(str, enum.Enum):
    GRANT = "Grant"
    DENY = "Deny"
    REVOKE = "Revoke"


class Reason(str, enum.Enum):
    TRUST_BELOW_THRESHOLD = "TrustBelowThreshold"
    ROLE_MISMATCH = "RoleMismatch"
    POLICY_TAMPERED = "PolicyTampered"
    POLICY_MODIFIED_SINCE_REQUEST = "PolicyModifiedSinceRequest"
    COMPONENT_UNAVAILABLE = "ComponentUnavailable"
    CREDENTIAL_INVALID = "CredentialInvalid"
    NO_POLICY = "NoPolicy"
    OK = "Ok"


class AttackSurface(str, enum.Enum):
    AS1_POLICY_ENGINE = "AS1_PolicyEngine"
    AS2_PEP = "AS2_PEP"
    AS3_INSIDER = "AS3_Insider"


class AttackKind(str, enum.Enum):
    POLICY_TAMPER = "PolicyTamper"
    DATA_MANIPULATION = "DataManipulation"
    CREDENTIAL_COMPROMISE = "CredentialCompromise"
    DDOS_FLOOD = "DDoSFlood"
    INSIDER_ACCESS = "InsiderAccess"
    COMPONENT_FAILURE = "ComponentFailure"


# Which surfaces each attack kind may enter through (Potential Attacks column).
ATTACK_SURFACES: dict[AttackKind, frozenset[AttackSurface]] = {
    AttackKind.POLICY_TAMPER: frozenset({AttackSurface.AS1_POLICY_ENGINE}),
    AttackKind.DATA_MANIPULATION: frozenset({AttackSurface.AS1_POLICY_ENGINE}),
    AttackKind.CREDENTIAL_COMPROMISE: frozenset(
        {AttackSurface.AS1_POLICY_ENGINE, AttackSurface.AS3_INSIDER}
    ),
    AttackKind.INSIDER_ACCESS: frozenset(
        {AttackSurface.AS1_POLICY_ENGINE, AttackSurface.AS3_INSIDER}
    ),
    AttackKind.DDOS_FLOOD: frozenset({AttackSurface.AS2_PEP, AttackSurface.AS3_INSIDER}),
    AttackKind.COMPONENT_FAILURE: frozenset({AttackSurface.AS2_PEP}),
}

DEFAULT_SURFACE: dict[AttackKind, AttackSurface] = {
    AttackKind.POLICY_TAMPER: AttackSurface.AS1_POLICY_ENGINE,
    AttackKind.DATA_MANIPULATION: AttackSurface.AS1_POLICY_ENGINE,
    AttackKind.CREDENTIAL_COMPROMISE: AttackSurface.AS3_INSIDER,
    AttackKind.INSIDER_ACCESS: AttackSurface.AS3_INSIDER,
    AttackKind.DDOS_FLOOD: AttackSurface.AS2_PEP,
    AttackKind.COMPONENT_FAILURE: AttackSurface.AS2_PEP,
}


@dataclass(frozen=True)
class Credential:
    token: str
    issued_at: int

    def valid_at(self, now: int) -> bool:
        return self.issued_at <= now


@dataclass(frozen=True)
class UserIdentity:
    user_id: str
    role: Role
    credential: Optional[Credential] = None
    session_id: Optional[str] = None

    def __post_init__(self) -> None:
        if not isinstance(self.role, Role):
            object.__setattr__(self, "role", Role(self.role))


@dataclass(frozen=True)
class Resource:
    resource_id: str
    segment_id: str
    network_id: str
    shared: bool = False


@dataclass(frozen=True)
class EnterpriseNetwork:
    network_id: str
    trust_threshold: float
    segments: frozenset[str] = frozenset()
    pep_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not 0.0 <= self.trust_threshold <= 1.0:
            raise ValueError(
                f"{self.network_id}: threshold out of [0,1]: {self.trust_threshold}"
            )


@dataclass(frozen=True)
class AccessRequest:
    request_id: int
    user: UserIdentity
    target: str
    network_id: str
    issued_at: int


@dataclass(frozen=True)
class Decision:
    """PDP verdict. Grant always carries Ok; Deny and Revoke never do."""

    verdict: Verdict
    reason: Reason
    decided_at: int

    def __post_init__(self) -> None:
        if (self.verdict is Verdict.GRANT) != (self.reason is Reason.OK):
            raise ValueError(f"inconsistent decision: {self.verdict.value}/{self.reason.value}")

    @classmethod
    def grant(cls, at: int) -> "Decision":
        return cls(Verdict.GRANT, Reason.OK, at)

    @classmethod
    def deny(cls, reason: Reason, at: int) -> "Decision":
        return cls(Verdict.DENY, reason, at)

    @property
    def granted(self) -> bool:
        return self.verdict is Verdict.GRANT


@dataclass(frozen=True)
class AttackEvent:
    surface: AttackSurface
    kind: AttackKind
    at: int
    target: str

    def __post_init__(self) -> None:
        if self.surface not in ATTACK_SURFACES[self.kind]:
            raise ValueError(
                f"attack {self.kind.value} cannot use surface {self.surface.value}"
            )


@dataclass(frozen=True)
class DurationStats:
    count: int = 0
    min: float = 0.0
    mean: float = 0.0
    max: float = 0.0

    @classmethod
    def of(cls, values: list[float] | tuple[float, ...]) -> "DurationStats":
        if not values:
            return cls()
        return cls(len(values), float(min(values)), sum(values) / len(values), float(max(values)))


@dataclass(frozen=True)
class KpiSnapshot:
    """Per-network KPI counters. Durations are in simulator ticks."""

    response_time: DurationStats = field(default_factory=DurationStats)
    policy_check_time: DurationStats = field(default_factory=DurationStats)
    breach_attempts: int = 0
    unauthorized_attempts: int = 0
    offered_requests: int = 0
    served_requests: int = 0
    failover_forwards: int = 0
    activity_log_len: int = 0

    @property
    def availability(self) -> float:
        # Zero offered requests counts as fully available.
        if self.offered_requests == 0:
            return 1.0
        return self.served_requests / self.offered_requests
