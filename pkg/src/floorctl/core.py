"""Floor-request lifecycle and the moderated first-come-first-served queue.

One conference owns any number of floors. Each floor keeps every request it
has seen, a policy (grant cap ``max_granted``, optional auto-grant), and the
ordering state needed to render the queue:

* requests enter PENDING at the queue tail;
* the chair accepts, denies, revokes or reprioritizes; accepting grants
  directly when a grant slot is free, otherwise parks the request in the
  ACCEPTED segment ahead of all pending ones;
* whenever a slot frees (release, revoke, wider policy) the head of the
  accepted segment is promoted until the cap is reached again;
* elevated-priority requests sort ahead of normal ones inside their segment,
  ties broken by arrival order, and never preempt a current grant holder.

Terminal records (denied/cancelled/released/revoked) stay visible in
snapshots for a configurable retention window so consoles can show the
outcome, then get garbage-collected.

Every state change appends exactly one event to the conference's event
buffer; the embedding layer drains the buffer after each mutation and fans
the events out. All mutations for one conference must be serialized by the
caller; this module does no locking.
"""

from __future__ import annotations

import time
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum

DEFAULT_TERMINAL_RETENTION = 30.0


class RequestState(str, Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    GRANTED = "granted"
    DENIED = "denied"
    CANCELLED = "cancelled"
    RELEASED = "released"
    REVOKED = "revoked"


TERMINAL_STATES = frozenset(
    {RequestState.DENIED, RequestState.CANCELLED, RequestState.RELEASED, RequestState.REVOKED}
)
LIVE_STATES = frozenset(
    {RequestState.PENDING, RequestState.ACCEPTED, RequestState.GRANTED}
)

# Legal transitions; creation into PENDING is handled separately.
LEGAL_TRANSITIONS: dict[RequestState, frozenset[RequestState]] = {
    RequestState.PENDING: frozenset(
        {RequestState.ACCEPTED, RequestState.GRANTED, RequestState.DENIED, RequestState.CANCELLED}
    ),
    RequestState.ACCEPTED: frozenset(
        {RequestState.GRANTED, RequestState.CANCELLED, RequestState.DENIED}
    ),
    RequestState.GRANTED: frozenset({RequestState.RELEASED, RequestState.REVOKED}),
}


class Priority(str, Enum):
    NORMAL = "normal"
    BUSINESS_CLASS = "business_class"


class Origin(str, Enum):
    RFID = "rfid"
    BFCP_CLIENT = "bfcp"
    WEB = "web"


class EventKind(str, Enum):
    REQUEST_STATE_CHANGED = "state"
    QUEUE_REORDERED = "reorder"
    POLICY_CHANGED = "policy"


class FloorControlError(Exception):
    """Base for all queue/state-machine errors; ``code`` is wire-stable."""

    code = "floor_control_error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)


class UnknownFloor(FloorControlError):
    code = "unknown_floor"


class UnknownRequest(FloorControlError):
    code = "unknown_request"


class DuplicateRequest(FloorControlError):
    code = "duplicate_request"


class NotCancellable(FloorControlError):
    code = "not_cancellable"


class NotGranted(FloorControlError):
    code = "not_granted"


class NotPending(FloorControlError):
    code = "not_pending"


class NotDeniable(FloorControlError):
    code = "not_deniable"


class NotReorderable(FloorControlError):
    code = "not_reorderable"


class InvalidPolicy(FloorControlError):
    code = "invalid_policy"


@dataclass(frozen=True)
class FloorPolicy:
    max_granted: int = 1
    auto_grant: bool = False


@dataclass(frozen=True)
class RecordView:
    """Immutable export of one request's visible state."""

    request_id: int
    floor_id: int
    user_id: int
    display_name: str
    origin: Origin
    priority: Priority
    state: RequestState
    arrival_seq: int
    queue_position: int

    def as_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "floor_id": self.floor_id,
            "user_id": self.user_id,
            "display_name": self.display_name,
            "origin": self.origin.value,
            "priority": self.priority.value,
            "state": self.state.value,
            "position": self.queue_position,
        }


@dataclass(frozen=True)
class QueueSnapshot:
    floor_id: int
    floor_name: str
    policy: FloorPolicy
    requests: tuple[RecordView, ...]

    def as_dict(self) -> dict:
        return {
            "floor_id": self.floor_id,
            "floor_name": self.floor_name,
            "policy": {
                "max_granted": self.policy.max_granted,
                "auto_grant": self.policy.auto_grant,
            },
            "requests": [r.as_dict() for r in self.requests],
        }


@dataclass(frozen=True)
class FloorEvent:
    """One observable change. ``queue`` is the floor's snapshot order right
    after the change, so consumers can rebuild the view without replaying
    ordering rules."""

    seq: int
    kind: EventKind
    floor_id: int
    request: RecordView | None
    old_state: RequestState | None
    new_state: RequestState | None
    queue: tuple[RecordView, ...]
    policy: FloorPolicy | None = None


@dataclass
class _Record:
    request_id: int
    floor_id: int
    user_id: int
    display_name: str
    origin: Origin
    priority: Priority
    state: RequestState
    arrival_seq: int
    queue_position: int = 0
    accept_seq: int | None = None
    grant_seq: int | None = None
    terminal_seq: int | None = None
    terminal_at: float | None = None


@dataclass
class _Floor:
    floor_id: int
    name: str
    policy: FloorPolicy
    records: dict[int, _Record] = field(default_factory=dict)


class Conference:
    """All floor state for one conference; see the module docstring."""

    def __init__(
        self,
        conference_id: int,
        terminal_retention: float = DEFAULT_TERMINAL_RETENTION,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.conference_id = conference_id
        self.terminal_retention = terminal_retention
        self._clock = clock
        self._floors: dict[int, _Floor] = {}
        self._requests: dict[int, _Record] = {}
        self._live_by_user: dict[tuple[int, int], int] = {}
        self._events: list[FloorEvent] = []
        self._next_request_id = 1
        self._next_arrival = 1
        self._next_accept = 1
        self._next_grant = 1
        self._next_terminal = 1
        self._next_event = 1

    # -- floors ----------------------------------------------------------

    def add_floor(self, floor_id: int, name: str = "", policy: FloorPolicy | None = None) -> None:
        if floor_id in self._floors:
            raise InvalidPolicy(f"floor {floor_id} already exists")
        self._floors[floor_id] = _Floor(
            floor_id=floor_id, name=name or f"floor-{floor_id}", policy=policy or FloorPolicy()
        )

    def floor_ids(self) -> list[int]:
        return sorted(self._floors)

    def has_floor(self, floor_id: int) -> bool:
        return floor_id in self._floors

    def policy(self, floor_id: int) -> FloorPolicy:
        return self._floor(floor_id).policy

    def _floor(self, floor_id: int) -> _Floor:
        try:
            return self._floors[floor_id]
        except KeyError:
            raise UnknownFloor(f"no floor {floor_id}") from None

    # -- ordering --------------------------------------------------------

    def _live_queue(self, floor: _Floor) -> list[_Record]:
        """Accepted then pending, elevated priority first inside each
        segment, ordered by entry into the segment."""

        def key(r: _Record):
            in_accepted = r.state is RequestState.ACCEPTED
            seq = r.accept_seq if in_accepted else r.arrival_seq
            return (0 if in_accepted else 1, 0 if r.priority is Priority.BUSINESS_CLASS else 1, seq)

        live = [
            r
            for r in floor.records.values()
            if r.state in (RequestState.ACCEPTED, RequestState.PENDING)
        ]
        live.sort(key=key)
        return live

    def _granted(self, floor: _Floor) -> list[_Record]:
        granted = [r for r in floor.records.values() if r.state is RequestState.GRANTED]
        granted.sort(key=lambda r: r.grant_seq)
        return granted

    def _recompute_positions(self, floor: _Floor) -> None:
        live = self._live_queue(floor)
        for pos, record in enumerate(live, start=1):
            record.queue_position = pos
        for record in floor.records.values():
            if record.state not in (RequestState.ACCEPTED, RequestState.PENDING):
                record.queue_position = 0

    def _retained(self, record: _Record, now: float) -> bool:
        if record.state not in TERMINAL_STATES:
            return True
        return record.terminal_at is not None and now - record.terminal_at <= self.terminal_retention

    def _ordered_views(self, floor: _Floor) -> tuple[RecordView, ...]:
        """Snapshot order: every record that ever held the floor (granted or
        since released/revoked) by grant order, then the live queue, then
        terminal records that never got the floor, newest decisions last."""
        now = self._clock()
        held = [
            r
            for r in floor.records.values()
            if r.grant_seq is not None and self._retained(r, now)
        ]
        held.sort(key=lambda r: r.grant_seq)
        ended = [
            r
            for r in floor.records.values()
            if r.grant_seq is None and r.state in TERMINAL_STATES and self._retained(r, now)
        ]
        ended.sort(key=lambda r: r.terminal_seq)
        return tuple(
            self._view(r) for r in (*held, *self._live_queue(floor), *ended)
        )

    def _view(self, record: _Record) -> RecordView:
        return RecordView(
            request_id=record.request_id,
            floor_id=record.floor_id,
            user_id=record.user_id,
            display_name=record.display_name,
            origin=record.origin,
            priority=record.priority,
            state=record.state,
            arrival_seq=record.arrival_seq,
            queue_position=record.queue_position,
        )

    # -- events ----------------------------------------------------------

    def _emit(
        self,
        kind: EventKind,
        floor: _Floor,
        record: _Record | None,
        old_state: RequestState | None,
        new_state: RequestState | None,
        policy: FloorPolicy | None = None,
    ) -> None:
        self._events.append(
            FloorEvent(
                seq=self._next_event,
                kind=kind,
                floor_id=floor.floor_id,
                request=self._view(record) if record is not None else None,
                old_state=old_state,
                new_state=new_state,
                queue=self._ordered_views(floor),
                policy=policy,
            )
        )
        self._next_event += 1

    def drain_events(self) -> list[FloorEvent]:
        events, self._events = self._events, []
        return events

    @property
    def event_seq(self) -> int:
        """Sequence number of the most recently emitted event."""
        return self._next_event - 1

    # -- state transitions -----------------------------------------------

    def _apply(self, floor: _Floor, record: _Record, new_state: RequestState) -> None:
        old = record.state
        if new_state not in LEGAL_TRANSITIONS.get(old, frozenset()):
            raise FloorControlError(f"illegal transition {old.value} -> {new_state.value}")
        record.state = new_state
        if new_state is RequestState.ACCEPTED:
            record.accept_seq = self._next_accept
            self._next_accept += 1
        elif new_state is RequestState.GRANTED:
            record.grant_seq = self._next_grant
            self._next_grant += 1
        if new_state in TERMINAL_STATES:
            record.terminal_seq = self._next_terminal
            self._next_terminal += 1
            record.terminal_at = self._clock()
            self._live_by_user.pop((record.floor_id, record.user_id), None)
        self._recompute_positions(floor)
        self._emit(EventKind.REQUEST_STATE_CHANGED, floor, record, old, new_state)

    def _grant_slots_free(self, floor: _Floor) -> int:
        return floor.policy.max_granted - len(self._granted(floor))

    def _promote(self, floor: _Floor) -> list[_Record]:
        """Fill free grant slots from the accepted segment head; under
        auto-grant, continue with pending requests in queue order."""
        promoted = []
        while self._grant_slots_free(floor) > 0:
            live = self._live_queue(floor)
            accepted = [r for r in live if r.state is RequestState.ACCEPTED]
            candidate = None
            if accepted:
                candidate = accepted[0]
            elif floor.policy.auto_grant:
                pending = [r for r in live if r.state is RequestState.PENDING]
                if pending:
                    candidate = pending[0]
            if candidate is None:
                break
            self._apply(floor, candidate, RequestState.GRANTED)
            promoted.append(candidate)
        return promoted

    def _gc(self, floor: _Floor) -> None:
        now = self._clock()
        expired = [
            rid
            for rid, r in floor.records.items()
            if r.state in TERMINAL_STATES and not self._retained(r, now)
        ]
        for rid in expired:
            del floor.records[rid]
            self._requests.pop(rid, None)

    def _get(self, floor: _Floor, request_id: int) -> _Record:
        record = floor.records.get(request_id)
        if record is None:
            raise UnknownRequest(f"no request {request_id} on floor {floor.floor_id}")
        return record

    # -- participant operations -------------------------------------------

    def submit_request(
        self,
        floor_id: int,
        user_id: int,
        display_name: str,
        origin: Origin,
        priority: Priority = Priority.NORMAL,
    ) -> RecordView:
        floor = self._floor(floor_id)
        self._gc(floor)
        if (floor_id, user_id) in self._live_by_user:
            raise DuplicateRequest(
                f"user {user_id} already has a live request on floor {floor_id}"
            )
        record = _Record(
            request_id=self._next_request_id,
            floor_id=floor_id,
            user_id=user_id,
            display_name=display_name,
            origin=origin,
            priority=priority,
            state=RequestState.PENDING,
            arrival_seq=self._next_arrival,
        )
        self._next_request_id += 1
        self._next_arrival += 1
        floor.records[record.request_id] = record
        self._requests[record.request_id] = record
        self._live_by_user[(floor_id, user_id)] = record.request_id
        self._recompute_positions(floor)
        self._emit(EventKind.REQUEST_STATE_CHANGED, floor, record, None, RequestState.PENDING)
        if floor.policy.auto_grant and self._grant_slots_free(floor) > 0:
            self._apply(floor, record, RequestState.GRANTED)
        return self._view(record)

    def cancel_request(self, floor_id: int, request_id: int) -> RecordView:
        floor = self._floor(floor_id)
        self._gc(floor)
        record = self._get(floor, request_id)
        if record.state not in (RequestState.PENDING, RequestState.ACCEPTED):
            raise NotCancellable(f"request {request_id} is {record.state.value}")
        self._apply(floor, record, RequestState.CANCELLED)
        return self._view(record)

    def release_floor(self, floor_id: int, request_id: int) -> RecordView:
        floor = self._floor(floor_id)
        self._gc(floor)
        record = self._get(floor, request_id)
        if record.state is not RequestState.GRANTED:
            raise NotGranted(f"request {request_id} is {record.state.value}")
        self._apply(floor, record, RequestState.RELEASED)
        self._promote(floor)
        return self._view(record)

    # -- chair operations --------------------------------------------------

    def chair_accept(self, floor_id: int, request_id: int) -> RecordView:
        floor = self._floor(floor_id)
        self._gc(floor)
        record = self._get(floor, request_id)
        if record.state is not RequestState.PENDING:
            raise NotPending(f"request {request_id} is {record.state.value}")
        if self._grant_slots_free(floor) > 0:
            self._apply(floor, record, RequestState.GRANTED)
        else:
            self._apply(floor, record, RequestState.ACCEPTED)
        return self._view(record)

    def chair_deny(self, floor_id: int, request_id: int) -> RecordView:
        floor = self._floor(floor_id)
        self._gc(floor)
        record = self._get(floor, request_id)
        if record.state not in (RequestState.PENDING, RequestState.ACCEPTED):
            raise NotDeniable(f"request {request_id} is {record.state.value}")
        self._apply(floor, record, RequestState.DENIED)
        return self._view(record)

    def chair_revoke(self, floor_id: int, request_id: int) -> RecordView:
        floor = self._floor(floor_id)
        self._gc(floor)
        record = self._get(floor, request_id)
        if record.state is not RequestState.GRANTED:
            raise NotGranted(f"request {request_id} is {record.state.value}")
        self._apply(floor, record, RequestState.REVOKED)
        self._promote(floor)
        return self._view(record)

    def chair_revoke_all(self, floor_id: int) -> list[RecordView]:
        """Revoke every grant in one batch. Promotion is suppressed so the
        accepted queue does not immediately retake the floor."""
        floor = self._floor(floor_id)
        self._gc(floor)
        revoked = []
        for record in self._granted(floor):
            self._apply(floor, record, RequestState.REVOKED)
            revoked.append(self._view(record))
        return revoked

    def chair_set_priority(
        self, floor_id: int, request_id: int, priority: Priority
    ) -> RecordView:
        floor = self._floor(floor_id)
        self._gc(floor)
        record = self._get(floor, request_id)
        if record.state not in (RequestState.PENDING, RequestState.ACCEPTED):
            raise NotReorderable(f"request {request_id} is {record.state.value}")
        record.priority = priority
        self._recompute_positions(floor)
        self._emit(
            EventKind.QUEUE_REORDERED, floor, record, record.state, record.state
        )
        return self._view(record)

    def set_policy(self, floor_id: int, policy: FloorPolicy) -> QueueSnapshot:
        floor = self._floor(floor_id)
        self._gc(floor)
        if (
            not isinstance(policy.max_granted, int)
            or isinstance(policy.max_granted, bool)
            or policy.max_granted < 1
            or not isinstance(policy.auto_grant, bool)
        ):
            raise InvalidPolicy(f"bad policy {policy!r}")
        old = floor.policy
        floor.policy = policy
        self._emit(EventKind.POLICY_CHANGED, floor, None, None, None, policy=policy)
        widened = policy.max_granted > old.max_granted or (
            policy.auto_grant and not old.auto_grant
        )
        if widened:
            # Shrinking never revokes; the chair must revoke explicitly.
            self._promote(floor)
        return self.snapshot(floor_id)

    # -- reads -------------------------------------------------------------

    def snapshot(self, floor_id: int) -> QueueSnapshot:
        floor = self._floor(floor_id)
        return QueueSnapshot(
            floor_id=floor.floor_id,
            floor_name=floor.name,
            policy=floor.policy,
            requests=self._ordered_views(floor),
        )

    def get_request(self, request_id: int) -> RecordView:
        record = self._requests.get(request_id)
        if record is None:
            raise UnknownRequest(f"no request {request_id}")
        return self._view(record)

    def find_live_request(self, floor_id: int, user_id: int) -> RecordView | None:
        request_id = self._live_by_user.get((floor_id, user_id))
        if request_id is None:
            return None
        return self._view(self._requests[request_id])

    def live_requests_for_user(self, user_id: int) -> list[RecordView]:
        views = []
        for (floor_id, uid), request_id in sorted(self._live_by_user.items()):
            if uid == user_id:
                views.append(self._view(self._requests[request_id]))
        return views
