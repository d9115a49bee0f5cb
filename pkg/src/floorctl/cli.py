"""Command line: the daemon, a participant client, chair actions over HTTP,
badge-line injection and the scenario runner."""

from __future__ import annotations

import asyncio
import importlib.resources
import json
import logging
import sys
from pathlib import Path

import click
import httpx

from .client import FloorClient
from .codec.model import RequestStatus
from .scenario import ScenarioRunner
from .server import DaemonConfig, FloorControlDaemon


def _setup_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def _parse_floor(value: str) -> tuple[int, str]:
    floor_id, _, name = value.partition(":")
    return int(floor_id), name or f"floor-{floor_id}"


@click.group()
def main() -> None:
    """Moderated floor control for mixed local/remote meetings."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--bfcp-port", default=8124, show_default=True)
@click.option("--http-port", default=8080, show_default=True)
@click.option("--badge-port", default=None, type=int, help="Enable the badge feed listener.")
@click.option("--conference-id", default=1, show_default=True)
@click.option(
    "--floor",
    "floors",
    multiple=True,
    default=("1:Main floor",),
    show_default=True,
    help='Floor as "id:name"; repeatable.',
)
@click.option("--max-granted", default=1, show_default=True)
@click.option("--auto-grant", is_flag=True, default=False)
@click.option("--chair-token", default="chair-secret", show_default=True)
@click.option("--terminal-retention-secs", default=30.0, show_default=True)
@click.option("--badge-directory", default=None, type=click.Path(exists=True))
@click.option("--debounce-ms", default=2000, show_default=True)
@click.option("--ui-dir", default=None, type=click.Path(), help="Static console bundle to serve at /.")
@click.option("--log-level", default="info", show_default=True)
def serve(
    host,
    bfcp_port,
    http_port,
    badge_port,
    conference_id,
    floors,
    max_granted,
    auto_grant,
    chair_token,
    terminal_retention_secs,
    badge_directory,
    debounce_ms,
    ui_dir,
    log_level,
) -> None:
    """Run the floor control daemon."""
    _setup_logging(log_level)
    config = DaemonConfig(
        conference_id=conference_id,
        host=host,
        bfcp_port=bfcp_port,
        http_port=http_port,
        badge_port=badge_port,
        floors=tuple(_parse_floor(f) for f in floors),
        max_granted=max_granted,
        auto_grant=auto_grant,
        chair_token=chair_token,
        terminal_retention_secs=terminal_retention_secs,
        badge_directory=badge_directory,
        debounce_ms=debounce_ms,
        ui_dir=ui_dir,
        log_level=log_level,
    )
    daemon = FloorControlDaemon(config)

    async def run_daemon():
        await daemon.start()
        stdin_pump = None
        if daemon.badge_gateway is not None and not sys.stdin.isatty():
            # Badge lines are also accepted on standard input when piped in.
            stdin_pump = asyncio.create_task(daemon.badge_gateway.pump_stdin())
        try:
            await asyncio.Event().wait()
        finally:
            if stdin_pump is not None:
                stdin_pump.cancel()
            await daemon.stop()

    try:
        asyncio.run(run_daemon())
    except KeyboardInterrupt:
        pass


def _client_options(fn):
    fn = click.option("--host", default="127.0.0.1", show_default=True)(fn)
    fn = click.option("--port", default=8124, show_default=True, help="Daemon protocol port.")(fn)
    fn = click.option("--conference", default=1, show_default=True)(fn)
    fn = click.option("--user", required=True, type=int, help="Your user id.")(fn)
    fn = click.option("--name", default=None, help="Display name shown in the queue.")(fn)
    return fn


async def _connected(host, port, conference, user, name) -> FloorClient:
    client = FloorClient(host, port, conference, user, display_name=name)
    await client.connect()
    return client


@main.command()
@_client_options
def connect(host, port, conference, user, name) -> None:
    """Check connectivity: say hello, print the acknowledgement."""

    async def go():
        client = await _connected(host, port, conference, user, name)
        click.echo(f"connected to conference {conference} as user {user}")
        await client.close()

    asyncio.run(go())


@main.command()
@_client_options
@click.option("--floor", default=1, show_default=True)
@click.option("--business", is_flag=True, help="Ask with elevated priority.")
@click.option(
    "--hold/--no-hold",
    default=True,
    show_default=True,
    help="Keep the session open and print status updates (leaving cancels the request).",
)
def request(host, port, conference, user, name, floor, business, hold) -> None:
    """Request the floor."""

    async def go():
        from .codec import messages as msgs

        client = await _connected(host, port, conference, user, name)
        view = await client.request_floor(
            floor, priority=msgs.WIRE_PRIORITY_ELEVATED if business else None
        )
        click.echo(
            f"request {view.floor_request_id}: {view.status.name.lower()}"
            + (f" position {view.queue_position}" if view.queue_position else "")
        )
        if not hold:
            await client.close()
            return
        click.echo("holding session; Ctrl-C leaves the queue")
        while True:
            notification = await client.notifications.get()
            for v in notification.views:
                if v.floor_request_id == view.floor_request_id:
                    click.echo(
                        f"request {v.floor_request_id}: {v.status.name.lower()}"
                        + (f" position {v.queue_position}" if v.queue_position else "")
                    )

    try:
        asyncio.run(go())
    except KeyboardInterrupt:
        pass


@main.command()
@_client_options
@click.option("--request-id", required=True, type=int)
def release(host, port, conference, user, name, request_id) -> None:
    """Release (or cancel) one of your requests."""

    async def go():
        client = await _connected(host, port, conference, user, name)
        view = await client.release_floor(request_id)
        click.echo(f"request {view.floor_request_id}: {view.status.name.lower()}")
        await client.close()

    asyncio.run(go())


@main.command()
@_client_options
def watch(host, port, conference, user, name) -> None:
    """Stay connected and print every notification."""

    async def go():
        client = await _connected(host, port, conference, user, name)
        click.echo("watching; Ctrl-C to stop")
        while True:
            notification = await client.notifications.get()
            label = notification.primitive.name
            if notification.views:
                for v in notification.views:
                    click.echo(
                        f"{label}: request {v.floor_request_id} "
                        f"{v.status.name.lower()}"
                        + (f" position {v.queue_position}" if v.queue_position else "")
                        + (f" ({v.display_name})" if v.display_name else "")
                    )
            else:
                click.echo(label)

    try:
        asyncio.run(go())
    except KeyboardInterrupt:
        pass


def _chair_options(fn):
    fn = click.option("--http", "base", default="http://127.0.0.1:8080", show_default=True)(fn)
    fn = click.option("--conference", default=1, show_default=True)(fn)
    fn = click.option("--token", default="chair-secret", show_default=True)(fn)
    return fn


def _chair_post(base: str, conference: int, token: str, payload: dict) -> None:
    response = httpx.post(
        f"{base}/api/conf/{conference}/chair/command",
        json=payload,
        headers={"Authorization": f"Bearer {token}"},
        timeout=5.0,
    )
    click.echo(f"{response.status_code} {json.dumps(response.json(), indent=2)}")
    if response.status_code != 200:
        sys.exit(1)


@main.group()
def chair() -> None:
    """Chair actions over the HTTP gateway."""


@chair.command("queue")
@_chair_options
@click.option("--floor", default=1, show_default=True)
def chair_queue(base, conference, token, floor) -> None:
    """Print the current queue."""
    response = httpx.get(
        f"{base}/api/conf/{conference}/floors/{floor}/queue", timeout=5.0
    )
    click.echo(json.dumps(response.json(), indent=2))


for _action in ("accept", "deny", "revoke"):

    @chair.command(_action)
    @_chair_options
    @click.argument("request_id", type=int)
    def _chair_action(base, conference, token, request_id, _action=_action) -> None:
        _chair_post(base, conference, token, {"action": _action, "request_id": request_id})


@chair.command("prioritize")
@_chair_options
@click.argument("request_id", type=int)
@click.option("--normal", is_flag=True, help="Back to normal priority.")
def chair_prioritize(base, conference, token, request_id, normal) -> None:
    _chair_post(
        base,
        conference,
        token,
        {
            "action": "set_priority",
            "request_id": request_id,
            "priority": "normal" if normal else "business_class",
        },
    )


@chair.command("revoke-all")
@_chair_options
@click.option("--floor", default=1, show_default=True)
def chair_revoke_all(base, conference, token, floor) -> None:
    _chair_post(base, conference, token, {"action": "revoke_all", "floor_id": floor})


@chair.command("policy")
@_chair_options
@click.option("--floor", default=1, show_default=True)
@click.option("--max-granted", required=True, type=int)
@click.option("--auto-grant/--no-auto-grant", default=False, show_default=True)
def chair_policy(base, conference, token, floor, max_granted, auto_grant) -> None:
    _chair_post(
        base,
        conference,
        token,
        {
            "action": "set_policy",
            "floor_id": floor,
            "policy": {"max_granted": max_granted, "auto_grant": auto_grant},
        },
    )


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8125, show_default=True, help="Badge feed port.")
@click.argument("lines", nargs=-1)
def badge(host, port, lines) -> None:
    """Inject badge feed lines ("TAG <hex> READER <id>"); reads stdin if none given."""

    async def go():
        _, writer = await asyncio.open_connection(host, port)
        feed = lines or (line.rstrip("\n") for line in sys.stdin)
        for line in feed:
            writer.write((line + "\n").encode("ascii"))
            await writer.drain()
            click.echo(f"sent: {line}")
        writer.close()

    asyncio.run(go())


@main.group()
def scenario() -> None:
    """Scripted multi-actor call flows."""


def _resolve_scenario(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    bundled = importlib.resources.files("floorctl.data") / f"{name}.scenario"
    if bundled.is_file():
        return Path(str(bundled))
    raise click.ClickException(f"no scenario file {name!r} (and no bundled one)")


@scenario.command("run")
@click.argument("name")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--http-port", default=8080, show_default=True)
@click.option("--bfcp-port", default=8124, show_default=True)
@click.option("--badge-port", default=None, type=int)
@click.option("--chair-token", default="chair-secret", show_default=True)
@click.option("--conference", default=1, show_default=True)
def scenario_run(name, host, http_port, bfcp_port, badge_port, chair_token, conference) -> None:
    """Run a scenario file against a live daemon."""
    path = _resolve_scenario(name)

    async def go():
        runner = ScenarioRunner(
            http_port=http_port,
            bfcp_port=bfcp_port,
            badge_port=badge_port,
            host=host,
            chair_token=chair_token,
            conference_id=conference,
        )
        return await runner.run_path(path)

    report = asyncio.run(go())
    click.echo(report.render())
    sys.exit(0 if report.ok else 1)


if __name__ == "__main__":
    main()
