"""Participant-side protocol client.

One connection per client. Requests get odd transaction ids; replies are
matched strictly by (transaction id, expected primitive), with server Error
replies surfacing as ServerError. Everything else arriving on the wire is a
server-initiated notification: it never consumes a pending transaction and
lands in ``notifications`` (and the notification log) instead. Server
heartbeat Hellos are acknowledged automatically.
"""

from __future__ import annotations

import asyncio
from dataclasses import dataclass, field

from . import codec
from .codec import messages as msgs
from .codec.model import ErrorCode, Primitive, RequestStatus

DEFAULT_REPLY_TIMEOUT = 5.0


class ClientError(Exception):
    pass


class RequestTimeout(ClientError):
    pass


class ServerError(ClientError):
    def __init__(self, code: int, info: str | None = None):
        name = ErrorCode(code).name if code in set(ErrorCode) else str(code)
        super().__init__(f"server error {name}" + (f": {info}" if info else ""))
        self.code = code
        self.info = info


@dataclass
class Notification:
    primitive: Primitive
    message: codec.BfcpMessage
    views: list[msgs.StatusView] = field(default_factory=list)


class FloorClient:
    def __init__(
        self,
        host: str,
        port: int,
        conference_id: int,
        user_id: int,
        display_name: str | None = None,
        chair_token: str | None = None,
        reply_timeout: float = DEFAULT_REPLY_TIMEOUT,
    ):
        self.host = host
        self.port = port
        self.conference_id = conference_id
        self.user_id = user_id
        self.display_name = display_name
        self.chair_token = chair_token
        self.reply_timeout = reply_timeout
        self.notifications: asyncio.Queue[Notification] = asyncio.Queue()
        self.notification_log: list[Notification] = []
        self.request_states: dict[int, msgs.StatusView] = {}
        self._reader: asyncio.StreamReader | None = None
        self._writer: asyncio.StreamWriter | None = None
        self._reader_task: asyncio.Task | None = None
        self._next_tx = -1  # first allocation yields 1
        self._pending: dict[int, tuple[Primitive, asyncio.Future]] = {}
        self._status_waiters: list[tuple[int, RequestStatus, asyncio.Future]] = []
        self.closed = False

    def _alloc_tx(self) -> int:
        self._next_tx += 2
        return self._next_tx

    async def connect(self) -> None:
        self._reader, self._writer = await asyncio.open_connection(self.host, self.port)
        self._reader_task = asyncio.create_task(self._read_loop())
        info = None
        if self.chair_token is not None:
            info = f"chair:{self.chair_token}"
        elif self.display_name:
            info = self.display_name
        await self._transact(
            msgs.hello(self.conference_id, self._alloc_tx(), self.user_id, info=info),
            Primitive.HELLO_ACK,
        )

    async def close(self) -> None:
        self.closed = True
        if self._reader_task is not None:
            self._reader_task.cancel()
            try:
                await self._reader_task
            except asyncio.CancelledError:
                pass
        if self._writer is not None:
            self._writer.close()

    async def _transact(
        self, msg: codec.BfcpMessage, expected: Primitive
    ) -> codec.BfcpMessage:
        assert self._writer is not None, "not connected"
        tx = msg.header.transaction_id
        future: asyncio.Future = asyncio.get_running_loop().create_future()
        self._pending[tx] = (expected, future)
        self._writer.write(codec.encode(msg))
        await self._writer.drain()
        try:
            reply = await asyncio.wait_for(future, self.reply_timeout)
        except asyncio.TimeoutError:
            raise RequestTimeout(f"no reply to tx {tx} in {self.reply_timeout}s") from None
        finally:
            self._pending.pop(tx, None)
        if reply.header.primitive == Primitive.ERROR:
            code_attr = reply.first(codec.AttributeKind.ERROR_CODE)
            info_attr = reply.first(codec.AttributeKind.PARTICIPANT_PROVIDED_INFO)
            raise ServerError(
                code_attr.value.code if code_attr else 0,
                info_attr.value if info_attr else None,
            )
        return reply

    async def _read_loop(self) -> None:
        assert self._reader is not None
        frames = codec.FrameReader()
        try:
            while True:
                chunk = await self._reader.read(4096)
                if not chunk:
                    self._fail_pending(ClientError("connection closed"))
                    return
                for msg in frames.feed(chunk):
                    self._handle_message(msg)
        except asyncio.CancelledError:
            raise
        except (codec.DecodeError, ConnectionError, OSError) as exc:
            self._fail_pending(ClientError(f"connection broken: {exc}"))

    def _fail_pending(self, exc: Exception) -> None:
        for _, future in self._pending.values():
            if not future.done():
                future.set_exception(exc)

    def _handle_message(self, msg: codec.BfcpMessage) -> None:
        primitive = msg.header.primitive
        tx = msg.header.transaction_id
        pending = self._pending.get(tx)
        if pending is not None and primitive in (pending[0], Primitive.ERROR):
            future = pending[1]
            if not future.done():
                future.set_result(msg)
            return
        if primitive == Primitive.HELLO:
            # Server heartbeat: acknowledge and move on.
            if self._writer is not None:
                self._writer.write(
                    codec.encode(
                        msgs.hello_ack(msg.header.conference_id, tx, msg.header.user_id)
                    )
                )
            return
        notification = Notification(
            primitive=primitive, message=msg, views=msgs.status_views(msg)
        )
        self.notification_log.append(notification)
        self.notifications.put_nowait(notification)
        if primitive == Primitive.FLOOR_REQUEST_STATUS:
            for view in notification.views:
                self.request_states[view.floor_request_id] = view
                self._wake_status_waiters(view)

    def _wake_status_waiters(self, view: msgs.StatusView) -> None:
        for request_id, target, future in list(self._status_waiters):
            if request_id == view.floor_request_id and view.status == target:
                if not future.done():
                    future.set_result(view)

    # -- operations ---------------------------------------------------------

    async def request_floor(
        self, floor_id: int, priority: int | None = None
    ) -> msgs.StatusView:
        reply = await self._transact(
            msgs.floor_request(
                self.conference_id,
                self._alloc_tx(),
                self.user_id,
                floor_id,
                priority=priority,
                info=self.display_name,
            ),
            Primitive.FLOOR_REQUEST_STATUS,
        )
        views = msgs.status_views(reply)
        if not views:
            raise ClientError("reply carried no request status")
        view = views[0]
        self.request_states[view.floor_request_id] = view
        return view

    async def release_floor(self, request_id: int) -> msgs.StatusView:
        reply = await self._transact(
            msgs.floor_release(
                self.conference_id, self._alloc_tx(), self.user_id, request_id
            ),
            Primitive.FLOOR_REQUEST_STATUS,
        )
        views = msgs.status_views(reply)
        if not views:
            raise ClientError("reply carried no request status")
        self.request_states[views[0].floor_request_id] = views[0]
        return views[0]

    async def await_status(
        self, request_id: int, target: RequestStatus, timeout: float | None = None
    ) -> msgs.StatusView:
        """Block until an unsolicited status for ``request_id`` reaches
        ``target``; the latest already-seen status counts."""
        known = self.request_states.get(request_id)
        if known is not None and known.status == target:
            return known
        future: asyncio.Future = asyncio.get_running_loop().create_future()
        entry = (request_id, target, future)
        self._status_waiters.append(entry)
        try:
            return await asyncio.wait_for(future, timeout or self.reply_timeout)
        except asyncio.TimeoutError:
            raise RequestTimeout(
                f"request {request_id} did not reach {target.name} in time"
            ) from None
        finally:
            self._status_waiters.remove(entry)

    async def chair_action(self, request_id: int, target: RequestStatus) -> None:
        """Chair decision over the wire; requires a chair-authenticated Hello."""
        await self._transact(
            msgs.chair_action(
                self.conference_id, self._alloc_tx(), self.user_id, request_id, target
            ),
            Primitive.CHAIR_ACTION_ACK,
        )
