"""HTTP boundary: chair console API, web participant actions, event stream.

All mutations go through the same per-conference command queue as the
protocol daemon, so HTTP- and wire-originated changes share one total
order. The event stream is standard ``text/event-stream``: named events
``snapshot``, ``state``, ``reorder`` and ``policy`` with JSON payloads, the
event seq as SSE id, a heartbeat comment every few seconds, and
``Last-Event-ID`` resume backed by the conference's ring buffer. Mutating
endpoints accept a client-generated ``command_id``; retries with the same id
return the first outcome instead of re-executing.
"""

from __future__ import annotations

import asyncio
import json
import logging
from pathlib import Path

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import core
from .server import ConferenceRuntime, FloorControlDaemon

log = logging.getLogger("floorctl.gateway")

CONFLICT_CODES = {
    core.DuplicateRequest.code,
    core.NotCancellable.code,
    core.NotGranted.code,
    core.NotPending.code,
    core.NotDeniable.code,
    core.NotReorderable.code,
}


class ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str = ""):
        self.status = status
        self.code = code
        self.detail = detail or code


def error_response(status: int, code: str, detail: str = "") -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": code, "detail": detail or code}
    )


def http_status_for(exc: core.FloorControlError) -> int:
    if isinstance(exc, (core.UnknownRequest, core.UnknownFloor)):
        return 404
    if isinstance(exc, core.InvalidPolicy):
        return 400
    if exc.code in CONFLICT_CODES:
        return 409
    return 400


class ChairCommand(BaseModel):
    action: str
    request_id: int | None = None
    floor_id: int | None = None
    priority: str | None = None
    policy: dict | None = None
    command_id: str | None = None


class JoinRequest(BaseModel):
    display_name: str
    command_id: str | None = None


class WebFloorAction(BaseModel):
    kind: str
    floor_id: int
    command_id: str | None = None


def sse_payload(event: core.FloorEvent) -> tuple[str, dict]:
    data: dict = {
        "seq": event.seq,
        "floor_id": event.floor_id,
        "queue": [r.as_dict() for r in event.queue],
    }
    if event.kind is core.EventKind.REQUEST_STATE_CHANGED:
        name = "state"
        data["request"] = event.request.as_dict() if event.request else None
        data["old_state"] = event.old_state.value if event.old_state else None
        data["new_state"] = event.new_state.value if event.new_state else None
    elif event.kind is core.EventKind.QUEUE_REORDERED:
        name = "reorder"
        data["request"] = event.request.as_dict() if event.request else None
    else:
        name = "policy"
        assert event.policy is not None
        data["policy"] = {
            "max_granted": event.policy.max_granted,
            "auto_grant": event.policy.auto_grant,
        }
    return name, data


def format_sse(name: str, event_id: int, data: dict) -> str:
    return f"event: {name}\nid: {event_id}\ndata: {json.dumps(data)}\n\n"


def snapshot_frame(runtime: ConferenceRuntime) -> str:
    seq, snaps = runtime.snapshot_all()
    data = {
        "seq": seq,
        "floors": [snaps[f].as_dict() for f in sorted(snaps)],
    }
    return format_sse("snapshot", seq, data)


def build_app(daemon: FloorControlDaemon) -> FastAPI:
    app = FastAPI(title="floorctl", docs_url=None, redoc_url=None)
    config = daemon.config

    def runtime_or_404(conference_id: int) -> ConferenceRuntime:
        runtime = daemon.runtimes.get(conference_id)
        if runtime is None:
            raise ApiError(404, "unknown_conference")
        return runtime

    def bearer_token(authorization: str | None = Header(default=None)) -> str | None:
        if authorization is None:
            return None
        scheme, _, token = authorization.partition(" ")
        if scheme.lower() != "bearer" or not token:
            return None
        return token

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return error_response(exc.status, exc.code, exc.detail)

    @app.exception_handler(core.FloorControlError)
    async def handle_core_error(request: Request, exc: core.FloorControlError):
        return error_response(http_status_for(exc), exc.code, str(exc))

    @app.get("/api/conf/{conference_id}/floors")
    async def list_floors(conference_id: int):
        runtime = runtime_or_404(conference_id)
        snaps = [
            runtime.conference.snapshot(f) for f in runtime.conference.floor_ids()
        ]
        return {
            "floors": [
                {"floor_id": s.floor_id, "floor_name": s.floor_name} for s in snaps
            ]
        }

    @app.get("/api/conf/{conference_id}/floors/{floor_id}/queue")
    async def get_queue(conference_id: int, floor_id: int):
        runtime = runtime_or_404(conference_id)
        if not runtime.conference.has_floor(floor_id):
            raise ApiError(404, "unknown_floor")
        return runtime.conference.snapshot(floor_id).as_dict()

    @app.post("/api/conf/{conference_id}/chair/command")
    async def chair_command(
        conference_id: int, cmd: ChairCommand, token: str | None = Depends(bearer_token)
    ):
        runtime = runtime_or_404(conference_id)
        if token != runtime.chair_token:
            raise ApiError(401, "unauthorized", "chair token required")
        return await dispatch_chair_command(runtime, cmd)

    @app.post("/api/conf/{conference_id}/participants")
    async def join(conference_id: int, body: JoinRequest):
        runtime = runtime_or_404(conference_id)
        name = body.display_name.strip()
        if not name:
            raise ApiError(400, "bad_request", "display_name required")
        user_id, token = runtime.run_cached(
            body.command_id, lambda: runtime.register_web_participant(name)
        )
        return {"user_id": user_id, "token": token, "display_name": name}

    @app.post("/api/conf/{conference_id}/floor-action")
    async def floor_action(
        conference_id: int,
        body: WebFloorAction,
        token: str | None = Depends(bearer_token),
    ):
        runtime = runtime_or_404(conference_id)
        user_id = runtime.web_user_for_token(token) if token else None
        if user_id is None:
            raise ApiError(401, "unauthorized", "participant token required")
        if not runtime.conference.has_floor(body.floor_id):
            raise ApiError(404, "unknown_floor")
        if body.kind == "request":
            display_name = runtime.display_name(user_id)

            def submit(conf: core.Conference):
                return conf.submit_request(
                    body.floor_id, user_id, display_name, core.Origin.WEB
                )

            view, _ = await runtime.execute(
                f"web:{user_id}", submit, command_id=body.command_id
            )
            return {"result": view.as_dict()}
        if body.kind == "release":
            def release(conf: core.Conference):
                live = conf.find_live_request(body.floor_id, user_id)
                if live is None:
                    raise core.UnknownRequest("no live request on this floor")
                if live.state is core.RequestState.GRANTED:
                    return conf.release_floor(body.floor_id, live.request_id)
                return conf.cancel_request(body.floor_id, live.request_id)

            view, _ = await runtime.execute(
                f"web:{user_id}", release, command_id=body.command_id
            )
            return {"result": view.as_dict()}
        raise ApiError(400, "bad_request", f"unknown action kind {body.kind!r}")

    @app.get("/api/conf/{conference_id}/events")
    async def events(
        conference_id: int,
        request: Request,
        token: str | None = Depends(bearer_token),
        last_event_id: str | None = Header(default=None, alias="Last-Event-ID"),
        last_event_id_query: str | None = Query(default=None, alias="last_event_id"),
    ):
        runtime = runtime_or_404(conference_id)
        if token is None or not runtime.is_authorized_token(token):
            raise ApiError(401, "unauthorized", "chair or participant token required")
        resume_raw = last_event_id or last_event_id_query
        resume_seq = None
        if resume_raw is not None:
            try:
                resume_seq = int(resume_raw)
            except ValueError:
                resume_seq = None

        async def stream():
            queue = runtime.hub.subscribe()
            try:
                last_sent = -1
                if resume_seq is not None:
                    backlog = runtime.hub.replay_from(resume_seq)
                    if backlog is None:
                        # History gap: resync with a fresh snapshot.
                        frame = snapshot_frame(runtime)
                        last_sent = runtime.conference.event_seq
                        yield frame
                    else:
                        last_sent = resume_seq
                        for event in backlog:
                            name, data = sse_payload(event)
                            yield format_sse(name, event.seq, data)
                            last_sent = event.seq
                else:
                    yield snapshot_frame(runtime)
                    last_sent = runtime.conference.event_seq
                while True:
                    try:
                        event = await asyncio.wait_for(
                            queue.get(), timeout=config.sse_heartbeat
                        )
                    except asyncio.TimeoutError:
                        yield ": ping\n\n"
                        continue
                    if event is None:
                        return
                    if event.seq <= last_sent:
                        continue
                    name, data = sse_payload(event)
                    yield format_sse(name, event.seq, data)
                    last_sent = event.seq
            finally:
                runtime.hub.unsubscribe(queue)

        return StreamingResponse(
            stream(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    ui_dir = config.ui_dir
    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


async def dispatch_chair_command(runtime: ConferenceRuntime, cmd: ChairCommand) -> dict:
    action = cmd.action
    conference = runtime.conference

    def need_request_id() -> int:
        if cmd.request_id is None:
            raise ApiError(400, "bad_request", f"{action} needs request_id")
        return cmd.request_id

    def need_floor_id() -> int:
        if cmd.floor_id is None:
            raise ApiError(400, "bad_request", f"{action} needs floor_id")
        if not conference.has_floor(cmd.floor_id):
            raise ApiError(404, "unknown_floor")
        return cmd.floor_id

    if action in ("accept", "deny", "revoke"):
        request_id = need_request_id()
        floor_id = conference.get_request(request_id).floor_id
        fn = {
            "accept": lambda conf: conf.chair_accept(floor_id, request_id),
            "deny": lambda conf: conf.chair_deny(floor_id, request_id),
            "revoke": lambda conf: conf.chair_revoke(floor_id, request_id),
        }[action]
        view, _ = await runtime.execute("chair:http", fn, command_id=cmd.command_id)
        return {"result": view.as_dict()}

    if action == "set_priority":
        request_id = need_request_id()
        if cmd.priority not in (p.value for p in core.Priority):
            raise ApiError(400, "bad_request", "priority must be normal or business_class")
        floor_id = conference.get_request(request_id).floor_id
        priority = core.Priority(cmd.priority)
        view, _ = await runtime.execute(
            "chair:http",
            lambda conf: conf.chair_set_priority(floor_id, request_id, priority),
            command_id=cmd.command_id,
        )
        return {"result": view.as_dict()}

    if action == "revoke_all":
        floor_id = need_floor_id()
        views, _ = await runtime.execute(
            "chair:http",
            lambda conf: conf.chair_revoke_all(floor_id),
            command_id=cmd.command_id,
        )
        return {"results": [v.as_dict() for v in views]}

    if action == "set_policy":
        floor_id = need_floor_id()
        if not isinstance(cmd.policy, dict):
            raise ApiError(400, "bad_request", "set_policy needs a policy object")
        try:
            policy = core.FloorPolicy(
                max_granted=cmd.policy["max_granted"],
                auto_grant=bool(cmd.policy.get("auto_grant", False)),
            )
        except KeyError:
            raise ApiError(400, "bad_request", "policy needs max_granted") from None
        snapshot, _ = await runtime.execute(
            "chair:http",
            lambda conf: conf.set_policy(floor_id, policy),
            command_id=cmd.command_id,
        )
        return {"result": snapshot.as_dict()}

    raise ApiError(400, "bad_request", f"unknown action {action!r}")
