"""Stream framing: split an octet stream into messages.

Frames are self-delimiting via the header's payload length, so the reader
just buffers until a whole message is available. After any framing or decode
error the stream is unusable; resynchronization is not attempted and the
owning connection must be dropped.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator

from .model import (
    HEADER_SIZE,
    MAX_PAYLOAD_WORDS,
    BfcpMessage,
    StreamClosed,
    Truncated,
)


class FrameReader:
    """Incremental reader; single-owner, not thread-safe.

    Feed raw chunks as they arrive; complete messages come back decoded.
    """

    def __init__(self, decode=None):
        if decode is None:
            from . import decode
        self._decode = decode
        self._buffer = bytearray()
        self._dead = False

    def feed(self, data: bytes) -> list[BfcpMessage]:
        """Buffer ``data`` and return every now-complete message, in order.

        Raises the decode error of the first bad frame; the reader is dead
        afterwards.
        """
        if self._dead:
            raise StreamClosed("frame reader used after a framing error")
        self._buffer += data
        messages = []
        try:
            while len(self._buffer) >= HEADER_SIZE:
                words = (self._buffer[2] << 8) | self._buffer[3]
                if words > MAX_PAYLOAD_WORDS:
                    raise Truncated(
                        f"declared payload of {words} words exceeds the 16 KiB cap"
                    )
                frame_len = HEADER_SIZE + words * 4
                if len(self._buffer) < frame_len:
                    break
                frame = bytes(self._buffer[:frame_len])
                del self._buffer[:frame_len]
                messages.append(self._decode(frame))
        except Exception:
            self._dead = True
            raise
        return messages

    def close(self) -> None:
        """Signal end of stream; raises StreamClosed if a partial frame remains."""
        if self._buffer and not self._dead:
            self._dead = True
            raise StreamClosed(
                f"stream ended with {len(self._buffer)} octets of a partial message"
            )
        self._dead = True

    @property
    def pending(self) -> int:
        return len(self._buffer)


def read_frames(chunks: Iterable[bytes]) -> Iterator[BfcpMessage]:
    """Decode a whole stream of chunks; yields messages in order.

    Raises decode errors as encountered and StreamClosed if the stream ends
    mid-message.
    """
    reader = FrameReader()
    for chunk in chunks:
        yield from reader.feed(chunk)
    reader.close()
