"""Line-oriented scenario runner: scripts multi-actor call flows against a
live daemon and asserts queue states along the way.

Grammar (one step per line, ``#`` comments)::

    conference <id>
    badge <tag> reader <reader-id>
    participant <name> user <id> connect
    participant <name> request floor <fid> [business] [expect <state> [pos <n>]]
    participant <name> release [expect <state>]
    participant <name> await <state> [timeout <seconds>]
    chair accept|deny|revoke <name>
    chair prioritize <name> [business|normal]
    chair revoke_all floor <fid>
    chair policy floor <fid> max <n> [auto]
    expect queue floor <fid> empty
    expect queue floor <fid>: <name> <state> [pos <n>], ...

Participant actions run over the wire protocol, chair actions over the HTTP
gateway, badge lines over the badge feed port; ``expect queue`` polls the
gateway's queue endpoint until it matches or times out, so asynchronous
propagation is tolerated. Names are resolved to request ids through the
queue, so badge-originated participants can be addressed too.
"""

from __future__ import annotations

import asyncio
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .client import FloorClient
from .codec import messages as msgs
from .codec.model import RequestStatus

EXPECT_TIMEOUT = 3.0
POLL_INTERVAL = 0.025

STATE_NAMES = {s.name.lower(): s for s in RequestStatus}


class ScenarioParseError(Exception):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class StepFailed(Exception):
    def __init__(self, lineno: int, text: str, expected: str, actual: str):
        super().__init__(
            f"line {lineno}: {text!r}\n  expected: {expected}\n  actual:   {actual}"
        )
        self.lineno = lineno
        self.expected = expected
        self.actual = actual


@dataclass
class Step:
    lineno: int
    text: str
    kind: str
    args: dict


@dataclass
class StepOutcome:
    lineno: int
    text: str
    ok: bool
    detail: str = ""


@dataclass
class ScenarioReport:
    steps: list[StepOutcome] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.steps)

    def render(self) -> str:
        lines = []
        for s in self.steps:
            mark = "PASS" if s.ok else "FAIL"
            lines.append(f"[{mark}] line {s.lineno}: {s.text}")
            if s.detail:
                lines.extend(f"    {d}" for d in s.detail.splitlines())
        lines.append(f"scenario {'PASS' if self.ok else 'FAIL'} ({len(self.steps)} steps)")
        return "\n".join(lines)


def _parse_expect_entries(lineno: int, text: str) -> list[tuple[str, str, int | None]]:
    entries = []
    for part in text.split(","):
        tokens = part.split()
        if len(tokens) < 2:
            raise ScenarioParseError(lineno, f"bad expectation entry {part!r}")
        name, state = tokens[0], tokens[1].lower()
        if state not in STATE_NAMES:
            raise ScenarioParseError(lineno, f"unknown state {state!r}")
        pos = None
        rest = tokens[2:]
        if rest:
            if len(rest) != 2 or rest[0] != "pos":
                raise ScenarioParseError(lineno, f"bad position clause {' '.join(rest)!r}")
            pos = int(rest[1])
        entries.append((name, state, pos))
    return entries


def parse_scenario(text: str) -> list[Step]:
    steps: list[Step] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]
        try:
            if head == "conference":
                steps.append(Step(lineno, line, "conference", {"id": int(tokens[1])}))
            elif head == "badge":
                if len(tokens) != 4 or tokens[2] != "reader":
                    raise ScenarioParseError(lineno, "badge <tag> reader <id>")
                steps.append(
                    Step(lineno, line, "badge", {"tag": tokens[1], "reader": tokens[3]})
                )
            elif head == "participant":
                name = tokens[1]
                verb = tokens[2]
                if verb == "user":
                    if tokens[4] != "connect":
                        raise ScenarioParseError(lineno, "participant <name> user <id> connect")
                    steps.append(
                        Step(lineno, line, "connect", {"name": name, "user": int(tokens[3])})
                    )
                elif verb == "request":
                    if tokens[3] != "floor":
                        raise ScenarioParseError(lineno, "participant <name> request floor <id>")
                    rest = tokens[5:]
                    business = False
                    if rest and rest[0] == "business":
                        business = True
                        rest = rest[1:]
                    expect_state = expect_pos = None
                    if rest:
                        if rest[0] != "expect" or len(rest) < 2:
                            raise ScenarioParseError(lineno, f"bad clause {' '.join(rest)!r}")
                        if rest[1].lower() not in STATE_NAMES:
                            raise ScenarioParseError(lineno, f"unknown state {rest[1]!r}")
                        expect_state = rest[1].lower()
                        if len(rest) == 4 and rest[2] == "pos":
                            expect_pos = int(rest[3])
                        elif len(rest) != 2:
                            raise ScenarioParseError(lineno, f"bad clause {' '.join(rest)!r}")
                    steps.append(
                        Step(
                            lineno,
                            line,
                            "request",
                            {
                                "name": name,
                                "floor": int(tokens[4]),
                                "business": business,
                                "expect_state": expect_state,
                                "expect_pos": expect_pos,
                            },
                        )
                    )
                elif verb == "release":
                    expect_state = None
                    if len(tokens) >= 5 and tokens[3] == "expect":
                        expect_state = tokens[4].lower()
                        if expect_state not in STATE_NAMES:
                            raise ScenarioParseError(lineno, f"unknown state {tokens[4]!r}")
                    steps.append(
                        Step(lineno, line, "release", {"name": name, "expect_state": expect_state})
                    )
                elif verb == "await":
                    state = tokens[3].lower()
                    if state not in STATE_NAMES:
                        raise ScenarioParseError(lineno, f"unknown state {tokens[3]!r}")
                    timeout = EXPECT_TIMEOUT
                    if len(tokens) >= 6 and tokens[4] == "timeout":
                        timeout = float(tokens[5])
                    steps.append(
                        Step(
                            lineno,
                            line,
                            "await",
                            {"name": name, "state": state, "timeout": timeout},
                        )
                    )
                else:
                    raise ScenarioParseError(lineno, f"unknown participant verb {verb!r}")
            elif head == "chair":
                verb = tokens[1]
                if verb in ("accept", "deny", "revoke"):
                    steps.append(Step(lineno, line, "chair", {"action": verb, "name": tokens[2]}))
                elif verb == "prioritize":
                    priority = "business_class"
                    if len(tokens) >= 4 and tokens[3] == "normal":
                        priority = "normal"
                    steps.append(
                        Step(
                            lineno,
                            line,
                            "chair_priority",
                            {"name": tokens[2], "priority": priority},
                        )
                    )
                elif verb == "revoke_all":
                    if tokens[2] != "floor":
                        raise ScenarioParseError(lineno, "chair revoke_all floor <id>")
                    steps.append(Step(lineno, line, "revoke_all", {"floor": int(tokens[3])}))
                elif verb == "policy":
                    if tokens[2] != "floor" or tokens[4] != "max":
                        raise ScenarioParseError(lineno, "chair policy floor <id> max <n> [auto]")
                    steps.append(
                        Step(
                            lineno,
                            line,
                            "policy",
                            {
                                "floor": int(tokens[3]),
                                "max": int(tokens[5]),
                                "auto": "auto" in tokens[6:],
                            },
                        )
                    )
                else:
                    raise ScenarioParseError(lineno, f"unknown chair verb {verb!r}")
            elif head == "expect":
                if tokens[1] != "queue" or tokens[2] != "floor":
                    raise ScenarioParseError(lineno, "expect queue floor <id> ...")
                floor_token = tokens[3].rstrip(":")
                floor_id = int(floor_token)
                remainder = line.split(None, 3)[3]
                if ":" in remainder:
                    entry_text = remainder.split(":", 1)[1].strip()
                    entries = _parse_expect_entries(lineno, entry_text)
                elif remainder.endswith("empty"):
                    entries = []
                else:
                    raise ScenarioParseError(lineno, "expect queue floor <id> empty | : entries")
                steps.append(
                    Step(lineno, line, "expect_queue", {"floor": floor_id, "entries": entries})
                )
            else:
                raise ScenarioParseError(lineno, f"unknown step {head!r}")
        except (IndexError, ValueError) as exc:
            raise ScenarioParseError(lineno, f"cannot parse: {exc}") from None
    return steps


class ScenarioRunner:
    def __init__(
        self,
        http_port: int,
        bfcp_port: int,
        badge_port: int | None = None,
        host: str = "127.0.0.1",
        chair_token: str = "chair-secret",
        conference_id: int = 1,
    ):
        self.host = host
        self.http_port = http_port
        self.bfcp_port = bfcp_port
        self.badge_port = badge_port
        self.chair_token = chair_token
        self.conference_id = conference_id
        self.clients: dict[str, FloorClient] = {}
        self.requests: dict[str, int] = {}
        self._badge_writer: asyncio.StreamWriter | None = None
        self._http: httpx.AsyncClient | None = None

    @property
    def api_base(self) -> str:
        return f"http://{self.host}:{self.http_port}/api/conf/{self.conference_id}"

    async def run_path(self, path: str | Path) -> ScenarioReport:
        return await self.run_text(Path(path).read_text(encoding="utf-8"))

    async def run_text(self, text: str) -> ScenarioReport:
        steps = parse_scenario(text)
        report = ScenarioReport()
        self._http = httpx.AsyncClient()
        try:
            for step in steps:
                try:
                    await self._apply(step)
                    report.steps.append(StepOutcome(step.lineno, step.text, True))
                except StepFailed as exc:
                    report.steps.append(
                        StepOutcome(
                            step.lineno,
                            step.text,
                            False,
                            f"expected: {exc.expected}\nactual:   {exc.actual}",
                        )
                    )
                    break
                except Exception as exc:
                    report.steps.append(
                        StepOutcome(
                            step.lineno, step.text, False, f"{type(exc).__name__}: {exc}"
                        )
                    )
                    break
        finally:
            await self._cleanup()
        return report

    async def _cleanup(self) -> None:
        for client in self.clients.values():
            await client.close()
        self.clients.clear()
        if self._badge_writer is not None:
            self._badge_writer.close()
            self._badge_writer = None
        if self._http is not None:
            await self._http.aclose()
            self._http = None

    # -- queue helpers ------------------------------------------------------

    async def _get_queue(self, floor_id: int) -> list[dict]:
        assert self._http is not None
        response = await self._http.get(f"{self.api_base}/floors/{floor_id}/queue")
        response.raise_for_status()
        return response.json()["requests"]

    async def _floor_ids(self) -> list[int]:
        assert self._http is not None
        response = await self._http.get(f"{self.api_base}/floors")
        response.raise_for_status()
        return [f["floor_id"] for f in response.json()["floors"]]

    async def _find_request_id(self, step: Step, name: str) -> int:
        """Resolve an actor name to its newest request id via the queues."""
        for floor_id in await self._floor_ids():
            for entry in await self._get_queue(floor_id):
                if entry["display_name"] == name:
                    return entry["request_id"]
        if name in self.requests:
            return self.requests[name]
        raise StepFailed(
            step.lineno, step.text, f"a request from {name!r}", "no such request in any queue"
        )

    # -- step application -----------------------------------------------------

    async def _apply(self, step: Step) -> None:
        handler = getattr(self, f"_step_{step.kind}")
        await handler(step)

    async def _step_conference(self, step: Step) -> None:
        self.conference_id = step.args["id"]

    async def _step_connect(self, step: Step) -> None:
        name = step.args["name"]
        client = FloorClient(
            self.host,
            self.bfcp_port,
            self.conference_id,
            step.args["user"],
            display_name=name,
        )
        await client.connect()
        self.clients[name] = client

    def _client(self, step: Step, name: str) -> FloorClient:
        client = self.clients.get(name)
        if client is None:
            raise StepFailed(
                step.lineno, step.text, f"participant {name!r} connected", "not connected"
            )
        return client

    async def _step_request(self, step: Step) -> None:
        name = step.args["name"]
        client = self._client(step, name)
        priority = msgs.WIRE_PRIORITY_ELEVATED if step.args["business"] else None
        view = await client.request_floor(step.args["floor"], priority=priority)
        self.requests[name] = view.floor_request_id
        expected = step.args["expect_state"]
        if expected is not None:
            got = view.status.name.lower()
            want_pos = step.args["expect_pos"]
            if got != expected or (want_pos is not None and view.queue_position != want_pos):
                raise StepFailed(
                    step.lineno,
                    step.text,
                    f"{expected}" + (f" pos {want_pos}" if want_pos else ""),
                    f"{got} pos {view.queue_position}",
                )

    async def _step_release(self, step: Step) -> None:
        name = step.args["name"]
        client = self._client(step, name)
        request_id = self.requests.get(name)
        if request_id is None:
            raise StepFailed(step.lineno, step.text, "a prior request", "none recorded")
        view = await client.release_floor(request_id)
        expected = step.args["expect_state"]
        if expected is not None and view.status.name.lower() != expected:
            raise StepFailed(step.lineno, step.text, expected, view.status.name.lower())

    async def _step_await(self, step: Step) -> None:
        name = step.args["name"]
        client = self._client(step, name)
        request_id = self.requests.get(name)
        if request_id is None:
            raise StepFailed(step.lineno, step.text, "a prior request", "none recorded")
        target = STATE_NAMES[step.args["state"]]
        await client.await_status(request_id, target, timeout=step.args["timeout"])

    async def _step_badge(self, step: Step) -> None:
        if self.badge_port is None:
            raise StepFailed(step.lineno, step.text, "a badge feed port", "none configured")
        if self._badge_writer is None:
            _, self._badge_writer = await asyncio.open_connection(self.host, self.badge_port)
        line = f"TAG {step.args['tag']} READER {step.args['reader']}\n"
        self._badge_writer.write(line.encode("ascii"))
        await self._badge_writer.drain()

    async def _chair_command(self, step: Step, payload: dict) -> dict:
        assert self._http is not None
        response = await self._http.post(
            f"{self.api_base}/chair/command",
            json=payload,
            headers={"Authorization": f"Bearer {self.chair_token}"},
        )
        if response.status_code != 200:
            raise StepFailed(
                step.lineno,
                step.text,
                "a 200 chair command",
                f"{response.status_code} {response.text}",
            )
        return response.json()

    async def _step_chair(self, step: Step) -> None:
        request_id = await self._find_request_id(step, step.args["name"])
        await self._chair_command(
            step, {"action": step.args["action"], "request_id": request_id}
        )

    async def _step_chair_priority(self, step: Step) -> None:
        request_id = await self._find_request_id(step, step.args["name"])
        await self._chair_command(
            step,
            {
                "action": "set_priority",
                "request_id": request_id,
                "priority": step.args["priority"],
            },
        )

    async def _step_revoke_all(self, step: Step) -> None:
        await self._chair_command(
            step, {"action": "revoke_all", "floor_id": step.args["floor"]}
        )

    async def _step_policy(self, step: Step) -> None:
        await self._chair_command(
            step,
            {
                "action": "set_policy",
                "floor_id": step.args["floor"],
                "policy": {"max_granted": step.args["max"], "auto_grant": step.args["auto"]},
            },
        )

    async def _step_expect_queue(self, step: Step) -> None:
        floor_id = step.args["floor"]
        entries = step.args["entries"]
        expected = [
            name + " " + state + (f" pos {pos}" if pos is not None else "")
            for name, state, pos in entries
        ]
        deadline = asyncio.get_running_loop().time() + EXPECT_TIMEOUT
        actual: list[str] = []
        while True:
            queue = await self._get_queue(floor_id)
            actual = [
                e["display_name"]
                + " "
                + e["state"]
                + (f" pos {e['position']}" if e["position"] else "")
                for e in queue
            ]
            if self._matches(entries, queue):
                return
            if asyncio.get_running_loop().time() > deadline:
                raise StepFailed(
                    step.lineno,
                    step.text,
                    "; ".join(expected) or "(empty queue)",
                    "; ".join(actual) or "(empty queue)",
                )
            await asyncio.sleep(POLL_INTERVAL)

    @staticmethod
    def _matches(entries: list[tuple[str, str, int | None]], queue: list[dict]) -> bool:
        if len(entries) != len(queue):
            return False
        for (name, state, pos), got in zip(entries, queue):
            if got["display_name"] != name or got["state"] != state:
                return False
            if pos is not None and got["position"] != pos:
                return False
        return True


async def run_scenario(path: str | Path, **runner_kwargs) -> ScenarioReport:
    runner = ScenarioRunner(**runner_kwargs)
    return await runner.run_path(path)
