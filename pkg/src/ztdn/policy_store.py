"""Versioned policy storage backed by a hash-chained trace log.

Canonical encoding
------------------
Every value hashed by this module is encoded as a sequence of fields in a
fixed order. Each field is written as a 4-byte big-endian length followed
by its UTF-8 bytes. Absent optional values encode as the empty string;
sets are sorted and joined with ``,``; floats use ``repr``.

* condition: required_role, min_trust, resource_scope, valid_window
  (``start:end``).
* record content digest: H(policy_id, version, condition-encoding,
  created_at, modified_at).
* trace entry: policy_id, version, action, at, content_digest (hex).
* chain: ``chain_hash[i] = H(chain_hash[i-1] || encode(entry[i]))`` with
  ``chain_hash[-1] = H(b"ztdn-trace-genesis")``.

The default digest is SHA-256; any ``bytes -> bytes`` callable can be passed
instead.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

from .core_model import Role

Digest = Callable[[bytes], bytes]


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def short_digest(data: bytes) -> bytes:
    """8-byte BLAKE2b, handy for compact test fixtures."""
    return hashlib.blake2b(data, digest_size=8).digest()


GENESIS_SEED = b"ztdn-trace-genesis"


class PolicyError(KeyError):
    """Unknown or duplicate policy id, or an out-of-order log write."""


class TraceAction(str, enum.Enum):
    CREATE = "Create"
    MODIFY = "Modify"
    REVOKE = "Revoke"


class ViolationReason(str, enum.Enum):
    MISSING_LOG_ENTRY = "MissingLogEntry"
    CHAIN_BROKEN = "ChainBroken"
    VERSION_GAP = "VersionGap"


@dataclass(frozen=True)
class PolicyCondition:
    required_role: Optional[Role] = None
    min_trust: Optional[float] = None
    resource_scope: frozenset[str] = frozenset()
    valid_window: Optional[tuple[int, int]] = None

    def __post_init__(self) -> None:
        if self.required_role is not None and not isinstance(self.required_role, Role):
            object.__setattr__(self, "required_role", Role(self.required_role))
        if not isinstance(self.resource_scope, frozenset):
            object.__setattr__(self, "resource_scope", frozenset(self.resource_scope))
        if self.valid_window is not None:
            object.__setattr__(self, "valid_window", tuple(self.valid_window))
        if (
            self.required_role is None
            and self.min_trust is None
            and not self.resource_scope
            and self.valid_window is None
        ):
            raise ValueError("policy condition needs at least one field")
        if self.min_trust is not None and not 0.0 <= self.min_trust <= 1.0:
            raise ValueError(f"min_trust out of [0,1]: {self.min_trust}")
        if self.valid_window is not None:
            start, end = self.valid_window
            if start > end:
                raise ValueError(f"valid_window start > end: {self.valid_window}")

    def applies_to(self, resource_id: str, segment_id: str) -> bool:
        return resource_id in self.resource_scope or segment_id in self.resource_scope

    def active_at(self, t: int) -> bool:
        if self.valid_window is None:
            return True
        return self.valid_window[0] <= t <= self.valid_window[1]

    def fields(self) -> list[str]:
        return [
            "" if self.required_role is None else self.required_role.value,
            "" if self.min_trust is None else repr(float(self.min_trust)),
            ",".join(sorted(self.resource_scope)),
            "" if self.valid_window is None else f"{self.valid_window[0]}:{self.valid_window[1]}",
        ]

    def to_dict(self) -> dict:
        return {
            "required_role": None if self.required_role is None else self.required_role.value,
            "min_trust": self.min_trust,
            "resource_scope": sorted(self.resource_scope),
            "valid_window": None if self.valid_window is None else list(self.valid_window),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PolicyCondition":
        window = data.get("valid_window")
        return cls(
            required_role=data.get("required_role"),
            min_trust=data.get("min_trust"),
            resource_scope=frozenset(data.get("resource_scope") or ()),
            valid_window=None if window is None else (int(window[0]), int(window[1])),
        )


def encode_fields(values: Iterable[object]) -> bytes:
    out = bytearray()
    for value in values:
        raw = str(value).encode("utf-8")
        out += len(raw).to_bytes(4, "big")
        out += raw
    return bytes(out)


@dataclass(frozen=True)
class PolicyRecord:
    policy_id: str
    version: int
    condition: PolicyCondition
    created_at: int
    modified_at: int

    def content_digest(self, digest: Digest = sha256) -> bytes:
        return digest(
            encode_fields(
                [
                    self.policy_id,
                    self.version,
                    encode_fields(self.condition.fields()).hex(),
                    self.created_at,
                    self.modified_at,
                ]
            )
        )


@dataclass(frozen=True)
class TraceEntry:
    policy_id: str
    version: int
    action: TraceAction
    at: int
    content_digest: str
    chain_hash: str

    def encode(self) -> bytes:
        return encode_fields(
            [self.policy_id, self.version, self.action.value, self.at, self.content_digest]
        )


@dataclass
class TraceLog:
    """Append-only list of trace entries. Never shrinks."""

    digest: Digest = sha256
    entries: list[TraceEntry] = field(default_factory=list)

    @property
    def genesis(self) -> bytes:
        return self.digest(GENESIS_SEED)

    def head(self) -> bytes:
        return bytes.fromhex(self.entries[-1].chain_hash) if self.entries else self.genesis

    def append(
        self, policy_id: str, version: int, action: TraceAction, at: int, content_digest: bytes
    ) -> TraceEntry:
        if self.entries and at < self.entries[-1].at:
            raise PolicyError(f"trace log is time-ordered: {at} < {self.entries[-1].at}")
        partial = TraceEntry(policy_id, version, action, at, content_digest.hex(), "")
        chained = self.digest(self.head() + partial.encode())
        entry = replace(partial, chain_hash=chained.hex())
        self.entries.append(entry)
        return entry

    def __len__(self) -> int:
        return len(self.entries)

    def broken_links(self) -> list[int]:
        """Indices whose stored chain hash does not follow from its predecessor.

        An entry links correctly if its hash follows from either the stored
        or the recomputed predecessor hash, so one corrupted hash or one
        rewritten entry flags exactly one index.
        """
        broken = []
        stored_prev = recomputed_prev = self.genesis
        for i, entry in enumerate(self.entries):
            body = entry.encode()
            from_stored = self.digest(stored_prev + body)
            from_recomputed = self.digest(recomputed_prev + body)
            if entry.chain_hash not in (from_stored.hex(), from_recomputed.hex()):
                broken.append(i)
            recomputed_prev = from_stored
            stored_prev = bytes.fromhex(entry.chain_hash) if _is_hex(entry.chain_hash) else from_stored
        return broken


def _is_hex(text: str) -> bool:
    try:
        bytes.fromhex(text)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class Violation:
    policy_id: str
    reason: ViolationReason
    entry_index: Optional[int] = None


@dataclass(frozen=True)
class IntegrityReport:
    violations: tuple[Violation, ...] = ()

    @property
    def intact(self) -> bool:
        return not self.violations

    def affected(self) -> set[str]:
        return {v.policy_id for v in self.violations}


class PolicyStore:
    """Single-writer policy store. ``tamper`` is the attack-injection hook."""

    def __init__(self, digest: Digest = sha256):
        self.digest = digest
        self.records: dict[str, PolicyRecord] = {}
        self.log = TraceLog(digest)
        self._next_id = 1

    def __contains__(self, policy_id: str) -> bool:
        return policy_id in self.records

    def __len__(self) -> int:
        return len(self.records)

    def get(self, policy_id: str) -> PolicyRecord:
        try:
            return self.records[policy_id]
        except KeyError:
            raise PolicyError(f"unknown policy {policy_id!r}") from None

    def policies(self) -> list[PolicyRecord]:
        return list(self.records.values())

    def _log(self, record: PolicyRecord, action: TraceAction, at: int) -> None:
        self.log.append(record.policy_id, record.version, action, at, record.content_digest(self.digest))

    def create_policy(
        self, condition: PolicyCondition, at: int, policy_id: Optional[str] = None
    ) -> PolicyRecord:
        if policy_id is None:
            logged = {e.policy_id for e in self.log.entries}
            while f"p{self._next_id}" in self.records or f"p{self._next_id}" in logged:
                self._next_id += 1
            policy_id = f"p{self._next_id}"
        if policy_id in self.records or any(e.policy_id == policy_id for e in self.log.entries):
            raise PolicyError(f"duplicate policy id {policy_id!r}")
        record = PolicyRecord(policy_id, 1, condition, at, at)
        self._log(record, TraceAction.CREATE, at)
        self.records[policy_id] = record
        return record

    def modify_policy(self, policy_id: str, new_condition: PolicyCondition, at: int) -> PolicyRecord:
        old = self.get(policy_id)
        if at < old.modified_at:
            raise PolicyError(f"{policy_id}: modification at {at} precedes {old.modified_at}")
        record = replace(old, version=old.version + 1, condition=new_condition, modified_at=at)
        self._log(record, TraceAction.MODIFY, at)
        self.records[policy_id] = record
        return record

    def revoke_policy(self, policy_id: str, at: int) -> None:
        record = self.get(policy_id)
        self.log.append(
            policy_id, record.version + 1, TraceAction.REVOKE, at, record.content_digest(self.digest)
        )
        del self.records[policy_id]

    def tamper(
        self,
        policy_id: str,
        new_condition: Optional[PolicyCondition] = None,
        at: Optional[int] = None,
        /,
        **fields: object,
    ) -> PolicyRecord:
        """Rewrite a stored record without touching the trace log.

        ``at`` sets ``modified_at``; any other ``PolicyRecord`` field may be
        overridden through keyword arguments (``version=...`` etc.).
        """
        record = self.get(policy_id)
        changes: dict[str, object] = dict(fields)
        if new_condition is not None:
            changes["condition"] = new_condition
        if at is not None:
            changes["modified_at"] = at
        forged = replace(record, **changes)
        del self.records[policy_id]
        self.records[forged.policy_id] = forged
        return forged

    def verify_integrity(self) -> IntegrityReport:
        violations: list[Violation] = []
        entries = self.log.entries

        for index in self.log.broken_links():
            violations.append(Violation(entries[index].policy_id, ViolationReason.CHAIN_BROKEN, index))

        by_policy: dict[str, list[TraceEntry]] = {}
        for entry in entries:
            by_policy.setdefault(entry.policy_id, []).append(entry)

        for policy_id, history in by_policy.items():
            versions = [e.version for e in history]
            if versions != list(range(1, len(versions) + 1)):
                violations.append(Violation(policy_id, ViolationReason.VERSION_GAP))
                continue
            revoked = history[-1].action is TraceAction.REVOKE
            if not revoked and policy_id not in self.records:
                violations.append(Violation(policy_id, ViolationReason.MISSING_LOG_ENTRY))

        for policy_id, record in self.records.items():
            history = by_policy.get(policy_id)
            if not history or history[-1].action is TraceAction.REVOKE:
                violations.append(Violation(policy_id, ViolationReason.MISSING_LOG_ENTRY))
                continue
            last = history[-1]
            if record.version != last.version:
                violations.append(Violation(policy_id, ViolationReason.VERSION_GAP))
            elif record.content_digest(self.digest).hex() != last.content_digest:
                violations.append(Violation(policy_id, ViolationReason.MISSING_LOG_ENTRY))

        return IntegrityReport(tuple(violations))

    def modified_since(self, policy_id: str, t: int) -> bool:
        record = self.get(policy_id)
        if record.modified_at > t:
            return True
        return policy_id in self.verify_integrity().affected()

    def matching(self, resource_id: str, segment_id: str, at: int) -> Optional[PolicyRecord]:
        """First policy (creation order) whose scope covers the resource at ``at``."""
        for record in self.records.values():
            if record.condition.applies_to(resource_id, segment_id) and record.condition.active_at(at):
                return record
        return None

    # line-delimited export, one JSON object per line with a fixed key order

    def dump_lines(self) -> str:
        lines = []
        for record in self.records.values():
            lines.append(
                json.dumps(
                    {
                        "kind": "policy",
                        "policy_id": record.policy_id,
                        "version": record.version,
                        "condition": record.condition.to_dict(),
                        "created_at": record.created_at,
                        "modified_at": record.modified_at,
                    },
                    separators=(",", ":"),
                )
            )
        for entry in self.log.entries:
            lines.append(
                json.dumps(
                    {
                        "kind": "trace",
                        "policy_id": entry.policy_id,
                        "version": entry.version,
                        "action": entry.action.value,
                        "at": entry.at,
                        "content_digest": entry.content_digest,
                        "chain_hash": entry.chain_hash,
                    },
                    separators=(",", ":"),
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def load_lines(cls, text: str, digest: Digest = sha256) -> "PolicyStore":
        store = cls(digest)
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if obj["kind"] == "policy":
                    record = PolicyRecord(
                        obj["policy_id"],
                        int(obj["version"]),
                        PolicyCondition.from_dict(obj["condition"]),
                        int(obj["created_at"]),
                        int(obj["modified_at"]),
                    )
                    store.records[record.policy_id] = record
                elif obj["kind"] == "trace":
                    store.log.entries.append(
                        TraceEntry(
                            obj["policy_id"],
                            int(obj["version"]),
                            TraceAction(obj["action"]),
                            int(obj["at"]),
                            obj["content_digest"],
                            obj["chain_hash"],
                        )
                    )
                else:
                    raise ValueError(f"unknown kind {obj['kind']!r}")
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"line {lineno}: {exc}") from exc
        return store

    def copy(self) -> "PolicyStore":
        twin = PolicyStore(self.digest)
        twin.records = dict(self.records)
        twin.log.entries = list(self.log.entries)
        twin._next_id = self._next_id
        return twin
