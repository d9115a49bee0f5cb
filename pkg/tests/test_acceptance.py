"""Acceptance suite: one test per exit criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. The oracle-equivalence sweep and the million-input fuzz run make this
module take a few minutes; everything else is fast.
"""

import asyncio
import importlib.resources
import random
import time
from functools import partial

from conftest import CHAIR_TOKEN, poll, run, running_daemon
from impl_adapter import impl_apply, impl_projection, make_conference
from op_random import random_conference, random_op
from oracle_model import explore

import httpx

from floorctl import codec
from floorctl.client import FloorClient
from floorctl.codec import messages as msgs
from floorctl.codec.model import (
    ALLOWED_ATTRIBUTES,
    GROUPED_KINDS,
    KNOWN_KINDS,
    TEXT_KINDS,
    U16_KINDS,
    Attribute,
    AttributeKind,
    BfcpMessage,
    DecodeError,
    ErrorCodeValue,
    GroupedValue,
    Primitive,
    RequestStatus,
    RequestStatusValue,
)
from floorctl.core import RequestState
from floorctl.scenario import ScenarioRunner

BUNDLED = importlib.resources.files("floorctl.data")
GOLDEN = BUNDLED / "ietf-fig2-4.scenario"
BADGES = BUNDLED / "badges.csv"

FUZZ_INPUT_BUDGET = 1_000_000
FUZZ_TIME_BUDGET = 3600.0  # whichever ends first


def ok(name: str) -> None:
    print(f"ACCEPTANCE PASS: {name}")


def chair_headers() -> dict:
    return {"Authorization": f"Bearer {CHAIR_TOKEN}"}


class TestGoldenScenario:
    def test_golden_scenario_end_state(self):
        """Badge users 4d004b05d6/4d004a5c07 and remote 'spromano'; arrival
        User1 -> spromano -> User2; accept spromano, accept User2 under
        multi-grant, revoke spromano."""

        async def scenario():
            async with running_daemon(
                badge_port=0, badge_directory=str(BADGES), floors=((1, "Audio"),)
            ) as daemon:
                runner = ScenarioRunner(
                    http_port=daemon.http_port,
                    bfcp_port=daemon.bfcp_port,
                    badge_port=daemon.badge_port,
                    chair_token=CHAIR_TOKEN,
                )
                report = await runner.run_path(str(GOLDEN))
                assert report.ok, report.render()
                snap = daemon.runtime.conference.snapshot(1)
                states = {r.display_name: (r.state, r.queue_position) for r in snap.requests}
                assert states == {
                    "User1": (RequestState.PENDING, 1),
                    "User2": (RequestState.GRANTED, 0),
                    "spromano": (RequestState.REVOKED, 0),
                }

        started = time.monotonic()
        run(scenario())
        elapsed = time.monotonic() - started
        assert elapsed < 10.0, f"golden scenario took {elapsed:.1f}s"
        ok(f"golden scenario ietf-fig2-4 (end state exact, {elapsed:.1f}s < 10s)")


class TestSingleGrantNarrative:
    def test_accept_three_then_release_promotes(self):
        """max_granted=1: three accepted requests land GRANTED, ACCEPTED,
        ACCEPTED; releasing the grant promotes the first accepted request and
        leaves the second next in line."""

        async def scenario():
            async with running_daemon(max_granted=1) as daemon:
                clients = []
                views = []
                for uid, name in ((201, "first"), (202, "second"), (203, "third")):
                    client = FloorClient(
                        "127.0.0.1", daemon.bfcp_port, 1, uid, display_name=name
                    )
                    await client.connect()
                    clients.append(client)
                    views.append(await client.request_floor(1))
                async with httpx.AsyncClient() as http:
                    for view in views:
                        r = await http.post(
                            f"http://127.0.0.1:{daemon.http_port}/api/conf/1/chair/command",
                            json={
                                "action": "accept",
                                "request_id": view.floor_request_id,
                            },
                            headers=chair_headers(),
                        )
                        assert r.status_code == 200
                    conf = daemon.runtime.conference
                    got = [
                        conf.get_request(v.floor_request_id).state for v in views
                    ]
                    assert got == [
                        RequestState.GRANTED,
                        RequestState.ACCEPTED,
                        RequestState.ACCEPTED,
                    ]
                    released = await clients[0].release_floor(views[0].floor_request_id)
                    assert released.status == RequestStatus.RELEASED
                    await clients[1].await_status(
                        views[1].floor_request_id, RequestStatus.GRANTED
                    )
                    third = conf.get_request(views[2].floor_request_id)
                    assert third.state is RequestState.ACCEPTED
                    assert third.queue_position == 1
                for client in clients:
                    await client.close()

        run(scenario())
        ok("single-grant narrative (granted/accepted/accepted, release promotes head)")


def build_random_message(rng: random.Random) -> BfcpMessage:
    """Deterministic random valid-message builder, independent of hypothesis."""

    def attr_for(kind: AttributeKind, depth: int) -> Attribute:
        if kind in U16_KINDS:
            value = rng.randrange(0x10000)
        elif kind == AttributeKind.PRIORITY:
            value = rng.randrange(8)
        elif kind == AttributeKind.REQUEST_STATUS:
            value = RequestStatusValue(
                RequestStatus(rng.randrange(1, 8)), rng.randrange(256)
            )
        elif kind == AttributeKind.ERROR_CODE:
            value = ErrorCodeValue(rng.randrange(256), rng.randbytes(rng.randrange(8)))
        elif kind in TEXT_KINDS:
            value = "".join(
                rng.choice("abcdefghijklmnopqrstuvwxyzüß日本語 ")
                for _ in range(rng.randrange(24))
            )
        elif kind in GROUPED_KINDS:
            subs = []
            if depth < 3:
                pool = sorted(KNOWN_KINDS, key=int)
                for _ in range(rng.randrange(3)):
                    sub_kind = rng.choice(pool)
                    if sub_kind in GROUPED_KINDS and depth + 1 >= 3:
                        continue
                    subs.append(attr_for(sub_kind, depth + 1))
            value = GroupedValue(rng.randrange(0x10000), tuple(subs))
        else:
            raise AssertionError(kind)
        return Attribute(kind, value, mandatory=bool(rng.getrandbits(1)))

    primitive = rng.choice(list(Primitive))
    allowed = sorted(ALLOWED_ATTRIBUTES[primitive], key=int)
    attrs = []
    for _ in range(rng.randrange(4)):
        if allowed:
            attrs.append(attr_for(rng.choice(allowed), 1))
    if rng.random() < 0.15:
        unknown = rng.choice([k for k in range(1, 128) if k not in set(KNOWN_KINDS)])
        attrs.append(Attribute(unknown, rng.randbytes(rng.randrange(12)), mandatory=False))
    return BfcpMessage.build(
        primitive,
        rng.randrange(2**32),
        rng.randrange(2**16),
        rng.randrange(2**16),
        attrs,
    )


class TestCodecCriteria:
    def test_ten_thousand_roundtrips(self):
        rng = random.Random(0xC0DEC)
        for _ in range(10_000):
            message = build_random_message(rng)
            encoded = codec.encode(message)
            assert codec.decode(encoded) == message
            assert len(encoded) % 4 == 0
        ok(f"codec round-trip, 10,000 generated messages ({codec.IMPLEMENTATION} codec)")

    def test_fuzz_campaign_million_inputs(self):
        rng = random.Random(0xFADE)
        seeds = [codec.encode(build_random_message(rng)) for _ in range(64)]
        started = time.monotonic()
        decoded = errors = 0
        i = 0
        while i < FUZZ_INPUT_BUDGET and time.monotonic() - started < FUZZ_TIME_BUDGET:
            mode = i % 4
            if mode == 0:
                data = rng.randbytes(rng.randrange(80))
            else:
                data = bytearray(seeds[rng.randrange(len(seeds))])
                for _ in range(rng.randint(1, 6)):
                    op = rng.randrange(3)
                    if op == 0 and data:
                        data[rng.randrange(len(data))] = rng.randrange(256)
                    elif op == 1 and len(data) > 1:
                        del data[rng.randrange(len(data))]
                    else:
                        data.insert(rng.randrange(len(data) + 1), rng.randrange(256))
                data = bytes(data)
            try:
                codec.decode(data)
                decoded += 1
            except DecodeError:
                errors += 1
            i += 1
        elapsed = time.monotonic() - started
        assert decoded + errors == i
        ok(
            f"fuzz campaign: {i:,} inputs in {elapsed:.0f}s, zero crashes "
            f"({decoded:,} decoded, {errors:,} typed errors)"
        )


class TestOracleEquivalence:
    def test_exhaustive_depth_six(self):
        """Every operation sequence of length <= 6 over 3 users, n in {1,2},
        on one- and two-floor conferences, matches the brute-force model
        state-for-state (states deduped by behavior-determining projection)."""
        total_states = total_edges = 0
        for floors in ((1,), (1, 2)):
            states, edges = explore(
                partial(make_conference, floors),
                impl_apply,
                impl_projection,
                users=(1, 2, 3),
                floors=floors,
                depth=6,
                priorities=("normal", "business_class"),
            )
            total_states += states
            total_edges += edges
        ok(
            f"oracle equivalence, exhaustive to depth 6 "
            f"({total_states:,} states, {total_edges:,} transitions compared)"
        )


class TestGrantCapInvariant:
    def test_hundred_thousand_random_sequences(self):
        rng = random.Random(0xCAFE)
        floors = (1, 2)
        users = (1, 2, 3, 4)
        checked = 0
        for _ in range(100_000):
            conf = random_conference(rng, floors)
            for _ in range(rng.randint(1, 8)):
                random_op(rng, conf, users, floors)
                for f in floors:
                    granted = sum(
                        1
                        for r in conf._floors[f].records.values()
                        if r.state is RequestState.GRANTED
                    )
                    assert granted <= conf.policy(f).max_granted
                    checked += 1
        ok(f"grant-cap invariant over 100,000 random sequences ({checked:,} checks)")


class TestRequirementsSuite:
    def test_req_08_31_request_and_cancel(self):
        """Remote attendees request attention and cancel it again."""

        async def scenario():
            async with running_daemon() as daemon:
                client = FloorClient("127.0.0.1", daemon.bfcp_port, 1, 301, display_name="r1")
                await client.connect()
                view = await client.request_floor(1)
                assert view.status == RequestStatus.PENDING
                out = await client.release_floor(view.floor_request_id)
                assert out.status == RequestStatus.CANCELLED
                await client.close()

        run(scenario())
        ok("requirement 08-31 (request + cancel)")

    def test_req_08_33_clear_speak_signal(self):
        """The owner is told when to speak (granted) and when to stop (revoked)."""

        async def scenario():
            async with running_daemon() as daemon:
                client = FloorClient("127.0.0.1", daemon.bfcp_port, 1, 302, display_name="r2")
                await client.connect()
                view = await client.request_floor(1)
                async with httpx.AsyncClient() as http:
                    base = f"http://127.0.0.1:{daemon.http_port}/api/conf/1/chair/command"
                    await http.post(
                        base,
                        json={"action": "accept", "request_id": view.floor_request_id},
                        headers=chair_headers(),
                    )
                    got = await client.await_status(
                        view.floor_request_id, RequestStatus.GRANTED
                    )
                    assert got.status == RequestStatus.GRANTED
                    await http.post(
                        base,
                        json={"action": "revoke", "request_id": view.floor_request_id},
                        headers=chair_headers(),
                    )
                    got = await client.await_status(
                        view.floor_request_id, RequestStatus.REVOKED
                    )
                    assert got.status == RequestStatus.REVOKED
                await client.close()

        run(scenario())
        ok("requirement 08-33 (granted/revoked signals delivered to the owner)")

    def test_req_08_34_snapshot_at_every_step(self):
        """The chair can see the whole queue at every point in a flow."""

        async def scenario():
            async with running_daemon(
                badge_port=0, badge_directory=str(BADGES)
            ) as daemon:
                async with httpx.AsyncClient() as http:
                    url = f"http://127.0.0.1:{daemon.http_port}/api/conf/1/floors/1/queue"

                    async def queue_ok(expected_len):
                        r = await http.get(url)
                        assert r.status_code == 200
                        assert len(r.json()["requests"]) == expected_len

                    await queue_ok(0)
                    reader, writer = await asyncio.open_connection(
                        "127.0.0.1", daemon.badge_port
                    )
                    writer.write(b"TAG 4d004b05d6 READER mic-1\n")
                    await writer.drain()
                    await poll(
                        lambda: len(daemon.runtime.conference.snapshot(1).requests) == 1
                    )
                    await queue_ok(1)
                    client = FloorClient(
                        "127.0.0.1", daemon.bfcp_port, 1, 102, display_name="spromano"
                    )
                    await client.connect()
                    view = await client.request_floor(1)
                    await queue_ok(2)
                    await http.post(
                        f"http://127.0.0.1:{daemon.http_port}/api/conf/1/chair/command",
                        json={"action": "accept", "request_id": view.floor_request_id},
                        headers=chair_headers(),
                    )
                    await queue_ok(2)
                    await client.close()
                    writer.close()

        run(scenario())
        ok("requirement 08-34 (queue snapshot available at every step)")

    def test_req_08_35_mute_all_in_one_command(self):
        async def scenario():
            async with running_daemon(max_granted=3) as daemon:
                clients = []
                async with httpx.AsyncClient() as http:
                    base = f"http://127.0.0.1:{daemon.http_port}/api/conf/1/chair/command"
                    for uid in (311, 312, 313):
                        client = FloorClient(
                            "127.0.0.1", daemon.bfcp_port, 1, uid, display_name=f"u{uid}"
                        )
                        await client.connect()
                        clients.append(client)
                        view = await client.request_floor(1)
                        await http.post(
                            base,
                            json={"action": "accept", "request_id": view.floor_request_id},
                            headers=chair_headers(),
                        )
                    conf = daemon.runtime.conference
                    granted = [
                        r for r in conf.snapshot(1).requests
                        if r.state is RequestState.GRANTED
                    ]
                    assert len(granted) == 3
                    r = await http.post(
                        base,
                        json={"action": "revoke_all", "floor_id": 1},
                        headers=chair_headers(),
                    )
                    assert r.status_code == 200
                    assert len(r.json()["results"]) == 3
                    granted = [
                        r for r in conf.snapshot(1).requests
                        if r.state is RequestState.GRANTED
                    ]
                    assert granted == []
                for client in clients:
                    await client.close()

        run(scenario())
        ok("requirement 08-35 (revoke_all empties the grants in one command)")

    def test_req_08_36_auto_grant_without_chair(self):
        async def scenario():
            async with running_daemon(auto_grant=True, max_granted=10) as daemon:
                for uid in (321, 322):
                    client = FloorClient(
                        "127.0.0.1", daemon.bfcp_port, 1, uid, display_name=f"u{uid}"
                    )
                    await client.connect()
                    view = await client.request_floor(1)
                    assert view.status == RequestStatus.GRANTED
                    await client.close()

        run(scenario())
        ok("requirement 08-36 (auto-grant speaks without chair action)")


class TestConsoleConvergence:
    def test_console_view_converges_after_stream_drop(self):
        """[SECONDARY] The built console bundle, fed the golden scenario with
        one mid-scenario connection drop, renders exactly the queue endpoint's
        view within a second of quiescence. Skipped when the frontend bundle
        is not built."""
        import pathlib
        import shutil
        import subprocess

        import pytest

        frontend = pathlib.Path(__file__).resolve().parent.parent / "frontend"
        probe = frontend / "tests" / "live-convergence.mjs"
        if shutil.which("node") is None or not (frontend / "dist" / "js").is_dir():
            pytest.skip("node or built frontend bundle unavailable")

        async def scenario():
            async with running_daemon(
                badge_port=0, badge_directory=str(BADGES), floors=((1, "Audio"),)
            ) as daemon:
                env = {
                    "FLOORCTL_BASE": f"http://127.0.0.1:{daemon.http_port}",
                    "FLOORCTL_TOKEN": CHAIR_TOKEN,
                    "PATH": __import__("os").environ["PATH"],
                }
                node = await asyncio.create_subprocess_exec(
                    "node",
                    str(probe),
                    env=env,
                    stdout=asyncio.subprocess.PIPE,
                    stderr=asyncio.subprocess.PIPE,
                )
                await asyncio.sleep(0.3)  # let it subscribe first
                runner = ScenarioRunner(
                    http_port=daemon.http_port,
                    bfcp_port=daemon.bfcp_port,
                    badge_port=daemon.badge_port,
                    chair_token=CHAIR_TOKEN,
                )
                report = await runner.run_path(str(GOLDEN))
                assert report.ok, report.render()
                stdout, stderr = await asyncio.wait_for(node.communicate(), 20)
                assert node.returncode == 0, (
                    f"probe failed rc={node.returncode}\n"
                    f"stdout: {stdout.decode()}\nstderr: {stderr.decode()}"
                )
                assert b"CONVERGED" in stdout

        run(scenario())
        ok("console convergence after mid-scenario stream drop [SECONDARY]")


class TestNotificationCompleteness:
    def test_targeted_statuses_equal_transitions_in_order(self):
        """Over the golden flow, the one connected owner receives exactly one
        targeted status per transition of its request, in event order."""

        async def scenario():
            async with running_daemon(
                badge_port=0, badge_directory=str(BADGES), max_granted=2
            ) as daemon:
                conf = daemon.runtime.conference
                _, badge_writer = await asyncio.open_connection(
                    "127.0.0.1", daemon.badge_port
                )
                spromano = FloorClient(
                    "127.0.0.1", daemon.bfcp_port, 1, 102, display_name="spromano"
                )
                await spromano.connect()
                async with httpx.AsyncClient() as http:
                    base = f"http://127.0.0.1:{daemon.http_port}/api/conf/1/chair/command"

                    badge_writer.write(b"TAG 4d004b05d6 READER mic-1\n")
                    await badge_writer.drain()
                    await poll(lambda: len(conf.snapshot(1).requests) == 1)
                    view = await spromano.request_floor(1)
                    badge_writer.write(b"TAG 4d004a5c07 READER mic-1\n")
                    await badge_writer.drain()
                    await poll(lambda: len(conf.snapshot(1).requests) == 3)

                    user2_id = next(
                        r.request_id
                        for r in conf.snapshot(1).requests
                        if r.display_name == "User2"
                    )
                    for request_id in (view.floor_request_id, user2_id):
                        r = await http.post(
                            base,
                            json={"action": "accept", "request_id": request_id},
                            headers=chair_headers(),
                        )
                        assert r.status_code == 200
                    await http.post(
                        base,
                        json={"action": "revoke", "request_id": view.floor_request_id},
                        headers=chair_headers(),
                    )
                    await spromano.await_status(
                        view.floor_request_id, RequestStatus.REVOKED
                    )

                # spromano's request transitions: created PENDING (solicited
                # reply), then GRANTED and REVOKED (unsolicited).
                unsolicited = [
                    v
                    for n in spromano.notification_log
                    if n.primitive == Primitive.FLOOR_REQUEST_STATUS
                    for v in n.views
                    if v.floor_request_id == view.floor_request_id
                ]
                assert [v.status for v in unsolicited] == [
                    RequestStatus.GRANTED,
                    RequestStatus.REVOKED,
                ]
                solicited = 1  # the FloorRequest reply carried PENDING
                transitions = 3
                assert solicited + len(unsolicited) == transitions
                # No other user has a session, so no other targeted statuses
                # exist; broadcasts are FloorStatus and excluded by filter.
                await spromano.close()
                badge_writer.close()

        run(scenario())
        ok("notification completeness (targeted statuses == transitions, in order)")
