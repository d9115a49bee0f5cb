"""Floor control daemon: TCP protocol sessions and the conference runtime.

Every mutation, regardless of entry point (protocol session, HTTP gateway,
badge feed), is funneled through the owning conference's serial command
queue, so state changes have a single total order. Fan-out happens inside
the queue worker: one targeted status message to the owner's sessions and
one floor-wide broadcast per state change, in event order, plus delivery
into the gateway's event hub.

Connection handling: each session has a bounded outbox drained by its own
writer task; a slow consumer overflows the outbox and is disconnected rather
than stalling the conference. Sessions silent past the heartbeat interval
get a server Hello; silence through the grace period closes them, and a
closing session cancels (or releases) its user's live requests.
"""

from __future__ import annotations

import asyncio
import logging
import secrets
import time
from collections import OrderedDict, deque
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum
from typing import Any

from . import codec, core
from .codec import messages as msgs
from .codec.model import ErrorCode, Primitive, RequestStatus

log = logging.getLogger("floorctl.server")

OUTBOX_LIMIT = 256
EVENT_RING_CAPACITY = 1024
COMMAND_CACHE_SIZE = 256
SUBSCRIBER_QUEUE_LIMIT = 512

CHAIR_HELLO_PREFIX = "chair:"

WIRE_STATUS = {
    core.RequestState.PENDING: RequestStatus.PENDING,
    core.RequestState.ACCEPTED: RequestStatus.ACCEPTED,
    core.RequestState.GRANTED: RequestStatus.GRANTED,
    core.RequestState.DENIED: RequestStatus.DENIED,
    core.RequestState.CANCELLED: RequestStatus.CANCELLED,
    core.RequestState.RELEASED: RequestStatus.RELEASED,
    core.RequestState.REVOKED: RequestStatus.REVOKED,
}

LIVE_WIRE_STATES = (
    core.RequestState.GRANTED,
    core.RequestState.ACCEPTED,
    core.RequestState.PENDING,
)


def domain_priority(wire: int) -> core.Priority:
    """Collapse the 3-bit wire priority onto the two queue classes."""
    return core.Priority.BUSINESS_CLASS if wire >= 3 else core.Priority.NORMAL


class Role(Enum):
    PARTICIPANT = "participant"
    CHAIR = "chair"


@dataclass
class DaemonConfig:
    conference_id: int = 1
    host: str = "127.0.0.1"
    bfcp_port: int = 8124
    http_port: int = 8080
    badge_port: int | None = None
    floors: tuple[tuple[int, str], ...] = ((1, "Main floor"),)
    max_granted: int = 1
    auto_grant: bool = False
    chair_token: str = "chair-secret"
    terminal_retention_secs: float = 30.0
    badge_directory: str | None = None
    debounce_ms: int = 2000
    heartbeat_idle: float = 60.0
    heartbeat_grace: float = 10.0
    sse_heartbeat: float = 15.0
    ui_dir: str | None = None
    log_level: str = "info"


class EventHub:
    """Ring buffer of recent events plus live subscriber queues."""

    def __init__(self, capacity: int = EVENT_RING_CAPACITY):
        self._ring: deque[core.FloorEvent] = deque(maxlen=capacity)
        self._subscribers: set[asyncio.Queue] = set()

    def publish(self, event: core.FloorEvent) -> None:
        self._ring.append(event)
        for queue in list(self._subscribers):
            try:
                queue.put_nowait(event)
            except asyncio.QueueFull:
                # Slow stream consumer: poison and detach.
                self._subscribers.discard(queue)
                try:
                    queue.get_nowait()
                    queue.put_nowait(None)
                except (asyncio.QueueFull, asyncio.QueueEmpty):
                    pass

    def subscribe(self) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue(maxsize=SUBSCRIBER_QUEUE_LIMIT)
        self._subscribers.add(queue)
        return queue

    def unsubscribe(self, queue: asyncio.Queue) -> None:
        self._subscribers.discard(queue)

    def replay_from(self, last_seq: int) -> list[core.FloorEvent] | None:
        """Buffered events after ``last_seq``, or None if the ring no longer
        reaches back that far (subscriber must resync from a snapshot)."""
        if not self._ring:
            return []
        if last_seq + 1 < self._ring[0].seq:
            return None
        return [e for e in self._ring if e.seq > last_seq]


class ConferenceRuntime:
    """One conference: core state, serial command queue, sessions, event hub."""

    def __init__(
        self,
        conference: core.Conference,
        chair_token: str,
        display_names: dict[int, str] | None = None,
    ):
        self.conference = conference
        self.chair_token = chair_token
        self.display_names: dict[int, str] = dict(display_names or {})
        self.sessions: list[Session] = []
        self.chair_session: Session | None = None
        self.hub = EventHub()
        self._commands: asyncio.Queue = asyncio.Queue()
        self._worker: asyncio.Task | None = None
        self._command_cache: OrderedDict[str, tuple[str, Any]] = OrderedDict()
        self._web_tokens: dict[str, int] = {}
        self._next_web_user = 0x8000
        self._stopping = False

    @property
    def conference_id(self) -> int:
        return self.conference.conference_id

    async def start(self) -> None:
        self._worker = asyncio.create_task(self._worker_loop())

    async def stop(self) -> None:
        self._stopping = True
        for session in list(self.sessions):
            await session.close("shutdown")
        if self._worker is not None:
            await self._commands.put(None)
            await self._worker
            self._worker = None

    def display_name(self, user_id: int) -> str:
        return self.display_names.get(user_id, f"user-{user_id}")

    # -- identity ---------------------------------------------------------

    def register_web_participant(self, display_name: str) -> tuple[int, str]:
        # Web identities live in a reserved id range so they cannot collide
        # with protocol-client user ids.
        user_id = self._next_web_user
        self._next_web_user += 1
        token = secrets.token_urlsafe(16)
        self._web_tokens[token] = user_id
        self.display_names[user_id] = display_name
        return user_id, token

    def web_user_for_token(self, token: str) -> int | None:
        return self._web_tokens.get(token)

    def is_authorized_token(self, token: str) -> bool:
        return token == self.chair_token or token in self._web_tokens

    # -- command queue ------------------------------------------------------

    async def execute(
        self,
        actor: str,
        fn: Callable[[core.Conference], Any],
        command_id: str | None = None,
        reply_session: "Session | None" = None,
    ) -> tuple[Any, list[core.FloorEvent]]:
        """Run one mutation on the conference's serial queue.

        Duplicate ``command_id`` values return the first run's outcome
        without re-executing. ``reply_session`` marks the session whose
        solicited reply already carries the final state of its own request,
        so fan-out skips that one targeted notification.
        """
        if self._worker is None or self._worker.done():
            raise RuntimeError("conference command queue is not running")
        future: asyncio.Future = asyncio.get_running_loop().create_future()
        await self._commands.put((actor, fn, command_id, reply_session, future))
        return await future

    async def _worker_loop(self) -> None:
        while True:
            item = await self._commands.get()
            if item is None:
                return
            actor, fn, command_id, reply_session, future = item
            if command_id is not None and command_id in self._command_cache:
                kind, payload = self._command_cache[command_id]
                if kind == "ok":
                    future.set_result((payload, []))
                else:
                    future.set_exception(payload)
                continue
            try:
                result = fn(self.conference)
            except core.FloorControlError as exc:
                self._remember(command_id, "err", exc)
                future.set_exception(exc)
                continue
            except Exception as exc:  # defect: never poison the queue
                log.exception("command failed: %s", actor)
                future.set_exception(exc)
                continue
            events = self.conference.drain_events()
            try:
                self._fan_out(actor, events, reply_session)
            except Exception:
                log.exception("fan-out failed")
            self._remember(command_id, "ok", result)
            future.set_result((result, events))

    def _remember(self, command_id: str | None, kind: str, payload: Any) -> None:
        if command_id is None:
            return
        self._command_cache[command_id] = (kind, payload)
        while len(self._command_cache) > COMMAND_CACHE_SIZE:
            self._command_cache.popitem(last=False)

    def run_cached(self, command_id: str | None, producer: Callable[[], Any]) -> Any:
        """Command-id idempotency for mutations outside the conference state
        (identity allocation). Runs synchronously on the event loop."""
        if command_id is not None and command_id in self._command_cache:
            kind, payload = self._command_cache[command_id]
            if kind == "ok":
                return payload
            raise payload
        result = producer()
        self._remember(command_id, "ok", result)
        return result

    # -- fan-out ------------------------------------------------------------

    def _fan_out(
        self,
        actor: str,
        events: list[core.FloorEvent],
        reply_session: "Session | None",
    ) -> None:
        skip_index = -1
        if reply_session is not None and reply_session.user_id is not None:
            for i, event in enumerate(events):
                if (
                    event.kind is core.EventKind.REQUEST_STATE_CHANGED
                    and event.request is not None
                    and event.request.user_id == reply_session.user_id
                ):
                    skip_index = i
        for i, event in enumerate(events):
            self.hub.publish(event)
            if event.kind is core.EventKind.REQUEST_STATE_CHANGED:
                self._log_transition(actor, event)
                assert event.request is not None
                self._notify_owner(event, reply_session if i == skip_index else None)
                if event.old_state is None:
                    self._notify_chair_new_request(event)
                self._broadcast_floor_status(event)
            elif event.kind is core.EventKind.QUEUE_REORDERED:
                self._broadcast_floor_status(event)

    def _log_transition(self, actor: str, event: core.FloorEvent) -> None:
        assert event.request is not None
        old = event.old_state.value if event.old_state else "-"
        log.info(
            "transition ts=%.6f conf=%s floor=%s request=%s old=%s new=%s actor=%s",
            time.time(),
            self.conference_id,
            event.floor_id,
            event.request.request_id,
            old,
            event.new_state.value if event.new_state else "-",
            actor,
        )

    def _status_message(self, session: "Session", view: core.RecordView) -> codec.BfcpMessage:
        return msgs.floor_request_status(
            self.conference_id,
            session.next_server_tx(),
            view.user_id,
            view.request_id,
            view.floor_id,
            WIRE_STATUS[view.state],
            view.queue_position,
            display_name=view.display_name,
        )

    def _notify_owner(
        self, event: core.FloorEvent, skip_session: "Session | None"
    ) -> None:
        view = event.request
        assert view is not None
        for session in self.sessions_for(view.user_id):
            if session is skip_session:
                continue
            session.send_message(self._status_message(session, view))

    def _notify_chair_new_request(self, event: core.FloorEvent) -> None:
        chair = self.chair_session
        view = event.request
        assert view is not None
        if chair is None or chair.user_id == view.user_id:
            return
        chair.send_message(self._status_message(chair, view))

    def _broadcast_floor_status(self, event: core.FloorEvent) -> None:
        entries = [
            (
                r.request_id,
                r.user_id,
                WIRE_STATUS[r.state],
                r.queue_position,
                r.display_name,
            )
            for state in LIVE_WIRE_STATES
            for r in event.queue
            if r.state is state
        ]
        for session in list(self.sessions):
            session.send_message(
                msgs.floor_status(
                    self.conference_id,
                    session.next_server_tx(),
                    session.user_id or 0,
                    event.floor_id,
                    entries,
                )
            )

    # -- sessions -----------------------------------------------------------

    def sessions_for(self, user_id: int) -> list["Session"]:
        return [s for s in self.sessions if s.user_id == user_id]

    def attach(self, session: "Session") -> None:
        if session not in self.sessions:
            self.sessions.append(session)

    async def detach(self, session: "Session") -> None:
        if session in self.sessions:
            self.sessions.remove(session)
        if self.chair_session is session:
            self.chair_session = None
        user_id = session.user_id
        if user_id is None or self._stopping or self.sessions_for(user_id):
            return
        # Last session of this user: its live requests leave the queue.
        def sever(conf: core.Conference):
            outcome = []
            for view in conf.live_requests_for_user(user_id):
                if view.state is core.RequestState.GRANTED:
                    outcome.append(conf.release_floor(view.floor_id, view.request_id))
                else:
                    outcome.append(conf.cancel_request(view.floor_id, view.request_id))
            return outcome

        await self.execute(f"system:disconnect:{user_id}", sever)

    def snapshot_all(self) -> tuple[int, dict[int, core.QueueSnapshot]]:
        """Event seq plus per-floor snapshots, read in one scheduling slot so
        they are mutually consistent."""
        snaps = {f: self.conference.snapshot(f) for f in self.conference.floor_ids()}
        return self.conference.event_seq, snaps


class Session:
    """One protocol connection; single reader, single writer task."""

    def __init__(
        self,
        daemon: "FloorControlDaemon",
        reader: asyncio.StreamReader,
        writer: asyncio.StreamWriter,
    ):
        self.daemon = daemon
        self.reader = reader
        self.writer = writer
        self.runtime: ConferenceRuntime | None = None
        self.user_id: int | None = None
        self.role = Role.PARTICIPANT
        self.last_rx = time.monotonic()
        self.closed = False
        self._server_tx = 0
        self._outbox: asyncio.Queue = asyncio.Queue(maxsize=OUTBOX_LIMIT)
        self._tasks: list[asyncio.Task] = []

    def next_server_tx(self) -> int:
        # Server-initiated transactions are even; clients use odd ones.
        self._server_tx += 2
        return self._server_tx

    def start(self) -> None:
        self._tasks = [
            asyncio.create_task(self._reader_loop()),
            asyncio.create_task(self._writer_loop()),
            asyncio.create_task(self._heartbeat_loop()),
        ]

    def send_message(self, msg: codec.BfcpMessage) -> bool:
        if self.closed:
            return False
        try:
            self._outbox.put_nowait(codec.encode(msg))
            return True
        except asyncio.QueueFull:
            log.warning("outbox overflow, dropping session user=%s", self.user_id)
            asyncio.get_running_loop().create_task(self.close("outbox overflow"))
            return False

    async def close(self, reason: str = "") -> None:
        if self.closed:
            return
        self.closed = True
        log.debug("closing session user=%s: %s", self.user_id, reason)
        try:
            # Let already-queued replies reach the wire before teardown.
            await asyncio.wait_for(self._outbox.join(), 1.0)
        except (asyncio.TimeoutError, asyncio.CancelledError):
            pass
        for task in self._tasks:
            if task is not asyncio.current_task():
                task.cancel()
        try:
            self.writer.close()
        except Exception:
            pass
        if self.runtime is not None:
            await self.runtime.detach(self)

    async def wait_closed(self) -> None:
        await asyncio.gather(*self._tasks, return_exceptions=True)

    # -- loops --------------------------------------------------------------

    async def _writer_loop(self) -> None:
        try:
            while True:
                data = await self._outbox.get()
                try:
                    self.writer.write(data)
                    await self.writer.drain()
                finally:
                    self._outbox.task_done()
        except (asyncio.CancelledError, ConnectionError, OSError):
            pass

    async def _heartbeat_loop(self) -> None:
        idle = self.daemon.config.heartbeat_idle
        grace = self.daemon.config.heartbeat_grace
        try:
            while not self.closed:
                await asyncio.sleep(max(idle / 4, 0.05))
                silent_for = time.monotonic() - self.last_rx
                if silent_for < idle:
                    continue
                self.send_message(
                    msgs.hello(
                        self.runtime.conference_id if self.runtime else 0,
                        self.next_server_tx(),
                        self.user_id or 0,
                    )
                )
                probe_at = time.monotonic()
                await asyncio.sleep(grace)
                if self.last_rx < probe_at:
                    await self.close("heartbeat timeout")
                    return
        except asyncio.CancelledError:
            pass

    async def _reader_loop(self) -> None:
        frame_reader = codec.FrameReader()
        try:
            while True:
                chunk = await self.reader.read(4096)
                if not chunk:
                    await self.close("peer closed")
                    return
                self.last_rx = time.monotonic()
                try:
                    messages = frame_reader.feed(chunk)
                except codec.UnknownPrimitive as exc:
                    self._reply_decode_error(exc, ErrorCode.UNKNOWN_PRIMITIVE)
                    await self.close("unknown primitive")
                    return
                except codec.UnknownMandatoryAttribute as exc:
                    self._reply_decode_error(exc, ErrorCode.UNKNOWN_MANDATORY_ATTRIBUTE)
                    await self.close("unknown mandatory attribute")
                    return
                except codec.DecodeError as exc:
                    log.debug("framing error, dropping connection: %s", exc)
                    await self.close("framing error")
                    return
                for msg in messages:
                    await self._dispatch(msg)
                    if self.closed:
                        return
        except asyncio.CancelledError:
            pass
        except (ConnectionError, OSError):
            await self.close("connection error")

    def _reply_decode_error(self, exc: codec.DecodeError, code: ErrorCode) -> None:
        self.send_message(
            msgs.error(
                exc.conference_id or 0,
                exc.transaction_id or 0,
                exc.user_id or 0,
                code,
                info=str(exc),
            )
        )

    # -- dispatch -------------------------------------------------------------

    def _reply_error(
        self, msg: codec.BfcpMessage, code: ErrorCode, info: str | None = None
    ) -> None:
        self.send_message(
            msgs.error(
                msg.header.conference_id,
                msg.header.transaction_id,
                msg.header.user_id,
                code,
                info=info,
            )
        )

    async def _dispatch(self, msg: codec.BfcpMessage) -> None:
        primitive = msg.header.primitive
        if primitive == Primitive.HELLO:
            await self._handle_hello(msg)
        elif primitive == Primitive.HELLO_ACK:
            pass  # heartbeat liveness is proven by any inbound traffic
        elif self.runtime is None:
            self._reply_error(msg, ErrorCode.UNAUTHORIZED_OPERATION, "send Hello first")
        elif primitive == Primitive.FLOOR_REQUEST:
            await self._handle_floor_request(msg)
        elif primitive == Primitive.FLOOR_RELEASE:
            await self._handle_floor_release(msg)
        elif primitive == Primitive.CHAIR_ACTION:
            await self._handle_chair_action(msg)
        else:
            self._reply_error(
                msg,
                ErrorCode.UNAUTHORIZED_OPERATION,
                f"{primitive.name} not served here",
            )

    async def _handle_hello(self, msg: codec.BfcpMessage) -> None:
        runtime = self.daemon.runtimes.get(msg.header.conference_id)
        if runtime is None:
            self._reply_error(msg, ErrorCode.CONFERENCE_DOES_NOT_EXIST)
            return
        info_attr = msg.first(codec.AttributeKind.PARTICIPANT_PROVIDED_INFO)
        info = info_attr.value if info_attr is not None else None
        if isinstance(info, str) and info.startswith(CHAIR_HELLO_PREFIX):
            token = info[len(CHAIR_HELLO_PREFIX) :]
            if token != runtime.chair_token:
                self._reply_error(msg, ErrorCode.UNAUTHORIZED_OPERATION, "bad chair token")
                return
            if runtime.chair_session is not None and runtime.chair_session is not self:
                self._reply_error(
                    msg, ErrorCode.UNAUTHORIZED_OPERATION, "chair already connected"
                )
                return
            self.role = Role.CHAIR
            runtime.chair_session = self
        elif isinstance(info, str) and info:
            runtime.display_names[msg.header.user_id] = info
        self.runtime = runtime
        self.user_id = msg.header.user_id
        runtime.attach(self)
        self.send_message(
            msgs.hello_ack(
                msg.header.conference_id, msg.header.transaction_id, msg.header.user_id
            )
        )

    async def _handle_floor_request(self, msg: codec.BfcpMessage) -> None:
        assert self.runtime is not None
        runtime = self.runtime
        floor_attr = msg.first(codec.AttributeKind.FLOOR_ID)
        if floor_attr is None:
            self._reply_error(msg, ErrorCode.INVALID_FLOOR_ID, "FLOOR-ID required")
            return
        floor_id = floor_attr.value
        prio_attr = msg.first(codec.AttributeKind.PRIORITY)
        priority = domain_priority(prio_attr.value) if prio_attr is not None else core.Priority.NORMAL
        info_attr = msg.first(codec.AttributeKind.PARTICIPANT_PROVIDED_INFO)
        user_id = self.user_id
        assert user_id is not None
        if info_attr is not None and info_attr.value:
            runtime.display_names[user_id] = info_attr.value
        display_name = runtime.display_name(user_id)
        try:
            view, _ = await runtime.execute(
                f"user:{user_id}",
                lambda conf: conf.submit_request(
                    floor_id, user_id, display_name, core.Origin.BFCP_CLIENT, priority
                ),
                reply_session=self,
            )
        except core.UnknownFloor:
            self._reply_error(msg, ErrorCode.INVALID_FLOOR_ID)
            return
        except core.DuplicateRequest as exc:
            self._reply_error(msg, ErrorCode.MAX_FLOOR_REQUESTS_REACHED, str(exc))
            return
        self.send_message(
            msgs.floor_request_status(
                runtime.conference_id,
                msg.header.transaction_id,
                user_id,
                view.request_id,
                view.floor_id,
                WIRE_STATUS[view.state],
                view.queue_position,
                display_name=view.display_name,
            )
        )

    async def _handle_floor_release(self, msg: codec.BfcpMessage) -> None:
        assert self.runtime is not None
        runtime = self.runtime
        id_attr = msg.first(codec.AttributeKind.FLOOR_REQUEST_ID)
        if id_attr is None:
            self._reply_error(
                msg, ErrorCode.FLOOR_REQUEST_ID_DOES_NOT_EXIST, "FLOOR-REQUEST-ID required"
            )
            return
        request_id = id_attr.value
        try:
            current = runtime.conference.get_request(request_id)
        except core.UnknownRequest:
            self._reply_error(msg, ErrorCode.FLOOR_REQUEST_ID_DOES_NOT_EXIST)
            return
        if current.user_id != self.user_id:
            self._reply_error(msg, ErrorCode.UNAUTHORIZED_OPERATION, "not your request")
            return

        def release(conf: core.Conference) -> core.RecordView:
            view = conf.get_request(request_id)
            if view.state is core.RequestState.GRANTED:
                return conf.release_floor(view.floor_id, request_id)
            return conf.cancel_request(view.floor_id, request_id)

        try:
            view, _ = await runtime.execute(
                f"user:{self.user_id}", release, reply_session=self
            )
        except core.UnknownRequest:
            self._reply_error(msg, ErrorCode.FLOOR_REQUEST_ID_DOES_NOT_EXIST)
            return
        except core.FloorControlError as exc:
            self._reply_error(msg, ErrorCode.UNAUTHORIZED_OPERATION, exc.code)
            return
        self.send_message(
            msgs.floor_request_status(
                runtime.conference_id,
                msg.header.transaction_id,
                self.user_id or 0,
                view.request_id,
                view.floor_id,
                WIRE_STATUS[view.state],
                view.queue_position,
                display_name=view.display_name,
            )
        )

    async def _handle_chair_action(self, msg: codec.BfcpMessage) -> None:
        assert self.runtime is not None
        runtime = self.runtime
        if self.role is not Role.CHAIR:
            self._reply_error(msg, ErrorCode.UNAUTHORIZED_OPERATION, "chair only")
            return
        target = msgs.chair_action_target(msg)
        if target is None:
            self._reply_error(
                msg, ErrorCode.UNAUTHORIZED_OPERATION, "request id and status required"
            )
            return
        request_id, status = target
        try:
            floor_id = runtime.conference.get_request(request_id).floor_id
        except core.UnknownRequest:
            self._reply_error(msg, ErrorCode.FLOOR_REQUEST_ID_DOES_NOT_EXIST)
            return
        if status in (RequestStatus.ACCEPTED, RequestStatus.GRANTED):
            fn = lambda conf: conf.chair_accept(floor_id, request_id)  # noqa: E731
        elif status == RequestStatus.DENIED:
            fn = lambda conf: conf.chair_deny(floor_id, request_id)  # noqa: E731
        elif status == RequestStatus.REVOKED:
            fn = lambda conf: conf.chair_revoke(floor_id, request_id)  # noqa: E731
        else:
            self._reply_error(
                msg, ErrorCode.UNAUTHORIZED_OPERATION, f"unsupported action {status.name}"
            )
            return
        try:
            await runtime.execute(f"chair:{self.user_id}", fn)
        except core.UnknownRequest:
            self._reply_error(msg, ErrorCode.FLOOR_REQUEST_ID_DOES_NOT_EXIST)
            return
        except core.FloorControlError as exc:
            self._reply_error(msg, ErrorCode.UNAUTHORIZED_OPERATION, exc.code)
            return
        self.send_message(
            msgs.chair_action_ack(
                runtime.conference_id, msg.header.transaction_id, msg.header.user_id
            )
        )


class FloorControlDaemon:
    """Composes the protocol listener, HTTP gateway and badge feed."""

    def __init__(self, config: DaemonConfig):
        self.config = config
        self.runtimes: dict[int, ConferenceRuntime] = {}
        self._tcp_server: asyncio.Server | None = None
        self._http_task: asyncio.Task | None = None
        self._uvicorn_server = None
        self.badge_gateway = None
        self.bfcp_port: int | None = None
        self.http_port: int | None = None
        self.badge_port: int | None = None

        conference = core.Conference(
            config.conference_id,
            terminal_retention=config.terminal_retention_secs,
        )
        policy = core.FloorPolicy(
            max_granted=config.max_granted, auto_grant=config.auto_grant
        )
        for floor_id, name in config.floors:
            conference.add_floor(floor_id, name, policy)
        self.runtimes[config.conference_id] = ConferenceRuntime(
            conference, config.chair_token
        )

    @property
    def runtime(self) -> ConferenceRuntime:
        return self.runtimes[self.config.conference_id]

    async def _handle_connection(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        session = Session(self, reader, writer)
        session.start()
        await session.wait_closed()

    async def start(self) -> None:
        for runtime in self.runtimes.values():
            await runtime.start()

        self._tcp_server = await asyncio.start_server(
            self._handle_connection, self.config.host, self.config.bfcp_port
        )
        self.bfcp_port = self._tcp_server.sockets[0].getsockname()[1]

        if self.config.badge_port is not None:
            from .badge import BadgeGateway

            self.badge_gateway = BadgeGateway(
                self.runtime,
                directory_path=self.config.badge_directory,
                debounce_ms=self.config.debounce_ms,
            )
            self.badge_port = await self.badge_gateway.start_server(
                self.config.host, self.config.badge_port
            )

        import uvicorn

        from .gateway import build_app

        app = build_app(self)
        uv_config = uvicorn.Config(
            app,
            host=self.config.host,
            port=self.config.http_port,
            log_level="warning",
            lifespan="off",
        )
        self._uvicorn_server = uvicorn.Server(uv_config)
        self._http_task = asyncio.create_task(self._uvicorn_server.serve())
        while not self._uvicorn_server.started:
            if self._http_task.done():
                self._http_task.result()
                raise RuntimeError("http server exited during startup")
            await asyncio.sleep(0.01)
        self.http_port = self._uvicorn_server.servers[0].sockets[0].getsockname()[1]
        log.info(
            "daemon up: bfcp=%s http=%s badge=%s conf=%s",
            self.bfcp_port,
            self.http_port,
            self.badge_port,
            self.config.conference_id,
        )

    async def stop(self) -> None:
        if self._tcp_server is not None:
            self._tcp_server.close()
            await self._tcp_server.wait_closed()
        if self.badge_gateway is not None:
            await self.badge_gateway.stop()
        if self._uvicorn_server is not None:
            self._uvicorn_server.should_exit = True
            if self._http_task is not None:
                await self._http_task
        for runtime in self.runtimes.values():
            await runtime.stop()

    async def run_forever(self) -> None:
        await self.start()
        try:
            await asyncio.Event().wait()
        finally:
            await self.stop()
