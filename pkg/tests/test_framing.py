"""Frame reader behavior over a simulated stream."""

import struct

import pytest

from floorctl import codec
from floorctl.codec import messages as msgs
from floorctl.codec.framing import FrameReader, read_frames
from floorctl.codec.model import StreamClosed, Truncated


def test_two_messages_in_one_read():
    a = codec.encode(msgs.hello(1, 1, 2))
    b = codec.encode(msgs.hello(1, 3, 2))
    reader = FrameReader()
    got = reader.feed(a + b)
    assert [m.header.transaction_id for m in got] == [1, 3]


def test_message_split_across_three_reads():
    data = codec.encode(msgs.floor_request(1, 5, 2, 1, info="alice"))
    reader = FrameReader()
    assert reader.feed(data[:5]) == []
    assert reader.feed(data[5:14]) == []
    (m,) = reader.feed(data[14:])
    assert m.header.transaction_id == 5
    assert reader.pending == 0


def test_oversized_declared_payload_rejected_immediately():
    header = struct.pack(">BBHIHH", 0x20, 11, 0xFFFF, 1, 1, 1)
    reader = FrameReader()
    with pytest.raises(Truncated):
        reader.feed(header)
    # Reader is dead after a framing error.
    with pytest.raises(StreamClosed):
        reader.feed(b"")


def test_close_with_partial_message():
    reader = FrameReader()
    reader.feed(codec.encode(msgs.hello(1, 1, 1))[:7])
    with pytest.raises(StreamClosed):
        reader.close()


def test_close_clean():
    reader = FrameReader()
    reader.feed(codec.encode(msgs.hello(1, 1, 1)))
    reader.close()


def test_read_frames_generator():
    chunks = [codec.encode(msgs.hello(1, tx, 1)) for tx in (1, 3, 5)]
    blob = b"".join(chunks)
    # Deliberately awkward chunking.
    pieces = [blob[i : i + 7] for i in range(0, len(blob), 7)]
    got = list(read_frames(pieces))
    assert [m.header.transaction_id for m in got] == [1, 3, 5]


def test_read_frames_partial_tail_raises():
    blob = codec.encode(msgs.hello(1, 1, 1)) + b"\x20"
    with pytest.raises(StreamClosed):
        list(read_frames([blob]))
