"""Shared helpers: integration tests drive a real daemon on ephemeral ports."""

import asyncio
import contextlib
import threading

from floorctl.server import DaemonConfig, FloorControlDaemon

CHAIR_TOKEN = "test-chair-token"


def run(coro):
    """Tests are plain sync functions driving one event loop per test."""
    return asyncio.run(coro)


def daemon_config(**overrides) -> DaemonConfig:
    defaults = dict(
        conference_id=1,
        host="127.0.0.1",
        bfcp_port=0,
        http_port=0,
        chair_token=CHAIR_TOKEN,
        sse_heartbeat=0.5,
    )
    defaults.update(overrides)
    return DaemonConfig(**defaults)


@contextlib.asynccontextmanager
async def running_daemon(**overrides):
    daemon = FloorControlDaemon(daemon_config(**overrides))
    await daemon.start()
    try:
        yield daemon
    finally:
        await daemon.stop()


async def poll(predicate, timeout=3.0, interval=0.02, message="condition"):
    """Await an eventually-true predicate (sync or async)."""
    deadline = asyncio.get_running_loop().time() + timeout
    while True:
        result = predicate()
        if asyncio.iscoroutine(result):
            result = await result
        if result:
            return result
        if asyncio.get_running_loop().time() > deadline:
            raise AssertionError(f"timed out waiting for {message}")
        await asyncio.sleep(interval)


@contextlib.contextmanager
def daemon_in_thread(**overrides):
    """A live daemon on a background event loop, for sync (CLI) tests."""
    box: dict = {}
    started = threading.Event()

    def target():
        async def main():
            daemon = FloorControlDaemon(daemon_config(**overrides))
            await daemon.start()
            box["daemon"] = daemon
            box["loop"] = asyncio.get_running_loop()
            box["stop"] = asyncio.Event()
            started.set()
            await box["stop"].wait()
            await daemon.stop()

        asyncio.run(main())

    thread = threading.Thread(target=target, daemon=True)
    thread.start()
    assert started.wait(10), "daemon did not start"
    try:
        yield box["daemon"]
    finally:
        box["loop"].call_soon_threadsafe(box["stop"].set)
        thread.join(timeout=10)
