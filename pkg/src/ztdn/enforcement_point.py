"""Policy enforcement point: intercepts requests and applies PDP commands."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union

from .core_model import AccessRequest
from .decision_point import CloseAll, Open, PepCommand


class PepStatus(str, enum.Enum):
    UP = "Up"
    DOWN = "Down"


@dataclass(frozen=True)
class ForwardedRequest:
    request: AccessRequest
    pep_id: str
    received_at: int


@dataclass(frozen=True)
class Unavailable:
    request: AccessRequest
    pep_id: str
    at: int
    overload: bool = False


InterceptResult = Union[ForwardedRequest, Unavailable]


@dataclass
class EnforcementPoint:
    """Mutable PEP state, driven by one simulation loop.

    ``capacity`` caps intercepted requests per tick; the request that
    exceeds it takes the PEP down (flood model). ``None`` means unbounded.
    """

    pep_id: str
    capacity: Optional[int] = None
    status: PepStatus = PepStatus.UP
    open_channels: set[tuple[str, str]] = field(default_factory=set)
    forwarded: int = 0
    enforced: int = 0
    unavailable: int = 0
    unauthorized_attempts: int = 0
    opened_ever: set[tuple[str, str]] = field(default_factory=set)
    transitions: list[tuple[int, PepStatus]] = field(default_factory=list)
    _load: dict[int, int] = field(default_factory=dict, repr=False)

    @property
    def up(self) -> bool:
        return self.status is PepStatus.UP

    def intercept(self, request: AccessRequest, at: int) -> InterceptResult:
        if not self.up:
            self.unavailable += 1
            return Unavailable(request, self.pep_id, at)
        load = self._load.get(at, 0) + 1
        self._load = {at: load}
        if self.capacity is not None and load > self.capacity:
            self.fail(at)
            self.unavailable += 1
            return Unavailable(request, self.pep_id, at, overload=True)
        self.forwarded += 1
        return ForwardedRequest(request, self.pep_id, at)

    def enforce(self, command: PepCommand) -> None:
        # CloseAll is applied even while Down: the PEP fails closed.
        self.enforced += 1
        if isinstance(command, Open):
            if not self.up:
                return
            pair = (command.user_id, command.resource_id)
            self.open_channels.add(pair)
            self.opened_ever.add(pair)
        elif isinstance(command, CloseAll):
            self.open_channels = {c for c in self.open_channels if c[0] != command.user_id}
        else:
            raise TypeError(f"not a PEP command: {command!r}")

    def attempt(self, user_id: str, resource_id: str) -> bool:
        """Data-plane use of a channel; a closed channel counts as unauthorized."""
        if (user_id, resource_id) in self.open_channels:
            return True
        self.unauthorized_attempts += 1
        return False

    def fail(self, at: int) -> None:
        if self.status is PepStatus.DOWN:
            return
        self.status = PepStatus.DOWN
        self.transitions.append((at, PepStatus.DOWN))

    def recover(self, at: int) -> None:
        if self.status is PepStatus.UP:
            return
        self.status = PepStatus.UP
        self.transitions.append((at, PepStatus.UP))
