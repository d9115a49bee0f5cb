"""Badge-read ingestion: turns tag reads at room microphones into queue actions.

Feed format is one ASCII line per read::

    TAG <lowercase-hex> READER <token>\\n

accepted on a local TCP port and on standard input. A read toggles the
badge owner's presence in the reader's floor queue: no live request means
submit, a live one means cancel (or release, if currently granted). Repeat
reads of the same tag at the same reader inside the debounce window collapse
to one action, because continuous-read hardware fires several times per
swipe.

The tag directory is a CSV file with two row shapes::

    <tag>,<user_id>,<display_name>     assigns a badge to a participant
    reader,<reader_id>,<floor_id>      maps a reader to a floor

(the literal first field ``reader`` cannot collide with a tag, which is
hex). A reader token that is simply the decimal id of an existing floor
also resolves, so tiny setups need no reader rows.
"""

from __future__ import annotations

import asyncio
import logging
import re
import time
from dataclasses import dataclass
from pathlib import Path

from . import core
from .server import ConferenceRuntime

log = logging.getLogger("floorctl.badge")

LINE_PATTERN = re.compile(r"^TAG ([0-9a-f]+) READER (\S+)$")
DEFAULT_DEBOUNCE_MS = 2000


class BadgeError(Exception):
    pass


class UnknownTag(BadgeError):
    pass


class UnknownReader(BadgeError):
    pass


class DirectoryParseError(BadgeError):
    pass


@dataclass(frozen=True)
class BadgeEvent:
    tag: str
    reader_id: str
    ts: float


@dataclass(frozen=True)
class BadgeDirectory:
    tags: dict[str, tuple[int, str]]
    readers: dict[str, int]

    @classmethod
    def empty(cls) -> "BadgeDirectory":
        return cls(tags={}, readers={})


def parse_directory(text: str, source: str = "<directory>") -> BadgeDirectory:
    """Parse the CSV directory; malformed or duplicate lines are reported
    with their line numbers."""
    tags: dict[str, tuple[int, str]] = {}
    readers: dict[str, int] = {}
    tag_lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise DirectoryParseError(f"{source}:{lineno}: expected 3 fields, got {len(parts)}")
        first, second, third = parts
        if first == "reader":
            try:
                readers[second] = int(third)
            except ValueError:
                raise DirectoryParseError(
                    f"{source}:{lineno}: reader floor id {third!r} is not an integer"
                ) from None
            continue
        tag = first.lower()
        if not re.fullmatch(r"[0-9a-f]+", tag):
            raise DirectoryParseError(f"{source}:{lineno}: tag {first!r} is not hex")
        if tag in tag_lines:
            raise DirectoryParseError(
                f"{source}:{lineno}: duplicate tag {tag} (first seen on line {tag_lines[tag]})"
            )
        tag_lines[tag] = lineno
        try:
            user_id = int(second)
        except ValueError:
            raise DirectoryParseError(
                f"{source}:{lineno}: user id {second!r} is not an integer"
            ) from None
        tags[tag] = (user_id, third)
    return BadgeDirectory(tags=tags, readers=readers)


def load_directory(path: str | Path) -> BadgeDirectory:
    path = Path(path)
    return parse_directory(path.read_text(encoding="utf-8"), source=str(path))


class BadgeGateway:
    """Feeds badge events into a conference's command queue."""

    def __init__(
        self,
        runtime: ConferenceRuntime,
        directory: BadgeDirectory | None = None,
        directory_path: str | Path | None = None,
        debounce_ms: int = DEFAULT_DEBOUNCE_MS,
        clock=time.monotonic,
    ):
        if directory is None:
            directory = (
                load_directory(directory_path)
                if directory_path is not None
                else BadgeDirectory.empty()
            )
        self.runtime = runtime
        self.directory = directory
        self.debounce = debounce_ms / 1000.0
        self._clock = clock
        self._last_read: dict[tuple[str, str], float] = {}
        self._server: asyncio.Server | None = None
        for user_id, name in directory.tags.values():
            runtime.display_names.setdefault(user_id, name)

    def reload_directory(self, directory: BadgeDirectory) -> None:
        """Atomic swap; in-flight actions keep the mapping they started with."""
        self.directory = directory
        for user_id, name in directory.tags.values():
            self.runtime.display_names.setdefault(user_id, name)

    def _resolve_floor(self, reader_id: str) -> int:
        floor_id = self.directory.readers.get(reader_id)
        if floor_id is None and reader_id.isdigit():
            candidate = int(reader_id)
            if self.runtime.conference.has_floor(candidate):
                return candidate
        if floor_id is None:
            raise UnknownReader(f"reader {reader_id!r} not registered")
        return floor_id

    async def ingest(self, event: BadgeEvent) -> str:
        """Apply one badge read; returns a short action description.

        Raises UnknownTag/UnknownReader for unroutable reads and returns
        "debounced" for repeat-fire reads inside the window.
        """
        entry = self.directory.tags.get(event.tag)
        if entry is None:
            raise UnknownTag(f"tag {event.tag!r} not in directory")
        floor_id = self._resolve_floor(event.reader_id)
        key = (event.tag, event.reader_id)
        last = self._last_read.get(key)
        if last is not None and event.ts - last < self.debounce:
            return "debounced"
        self._last_read[key] = event.ts
        user_id, display_name = entry

        def toggle(conf: core.Conference):
            live = conf.find_live_request(floor_id, user_id)
            if live is None:
                view = conf.submit_request(
                    floor_id, user_id, display_name, core.Origin.RFID
                )
                return ("submitted", view)
            if live.state is core.RequestState.GRANTED:
                return ("released", conf.release_floor(floor_id, live.request_id))
            return ("cancelled", conf.cancel_request(floor_id, live.request_id))

        (action, view), _ = await self.runtime.execute(f"badge:{event.tag}", toggle)
        log.info(
            "badge %s: tag=%s user=%s floor=%s request=%s",
            action,
            event.tag,
            user_id,
            floor_id,
            view.request_id,
        )
        return action

    async def ingest_line(self, line: str) -> str | None:
        """Parse and apply one feed line; bad input is logged and dropped."""
        line = line.rstrip("\r\n")
        if not line:
            return None
        match = LINE_PATTERN.match(line)
        if match is None:
            log.warning("dropping malformed badge line: %r", line)
            return None
        event = BadgeEvent(tag=match.group(1), reader_id=match.group(2), ts=self._clock())
        try:
            return await self.ingest(event)
        except (UnknownTag, UnknownReader) as exc:
            log.warning("dropping badge read: %s", exc)
            return None
        except core.FloorControlError as exc:
            log.warning("badge action rejected: %s", exc)
            return None

    async def _serve_connection(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        try:
            while True:
                line = await reader.readline()
                if not line:
                    return
                try:
                    await self.ingest_line(line.decode("ascii", errors="replace"))
                except Exception:
                    log.exception("badge line failed")
        finally:
            writer.close()

    async def start_server(self, host: str, port: int) -> int:
        self._server = await asyncio.start_server(self._serve_connection, host, port)
        return self._server.sockets[0].getsockname()[1]

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None

    async def pump_stdin(self) -> None:
        """Read feed lines from standard input until EOF."""
        loop = asyncio.get_running_loop()
        reader = asyncio.StreamReader()
        protocol = asyncio.StreamReaderProtocol(reader)
        import sys

        await loop.connect_read_pipe(lambda: protocol, sys.stdin)
        while True:
            line = await reader.readline()
            if not line:
                return
            await self.ingest_line(line.decode("ascii", errors="replace"))
