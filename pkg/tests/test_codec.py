"""Unit tests for the wire codec against an independent hand-packer.

The reference packer below builds octets straight from the documented
layout with struct; it shares no code with the codec under test.
"""

import struct

import pytest

from floorctl import codec
from floorctl.codec import messages as msgs
from floorctl.codec import model
from floorctl.codec.model import (
    Attribute,
    AttributeKind,
    BfcpMessage,
    ErrorCodeValue,
    GroupedValue,
    Primitive,
    RequestStatus,
    RequestStatusValue,
)


def ref_header(primitive: int, payload_words: int, conf: int, tx: int, user: int) -> bytes:
    return struct.pack(">BBHIHH", 0b001_00000, primitive, payload_words, conf, tx, user)


def ref_attr(kind: int, contents: bytes, mandatory: bool = True) -> bytes:
    length = 2 + len(contents)
    raw = struct.pack(">BB", (kind << 1) | int(mandatory), length) + contents
    return raw + b"\x00" * (-len(raw) % 4)


class TestEncodeExamples:
    def test_hello_bytes(self):
        # Hello, conference 1, transaction 7, user 2, no attributes.
        m = BfcpMessage.build(Primitive.HELLO, 1, 7, 2)
        expected = ref_header(11, 0, 1, 7, 2)
        assert len(expected) == 12
        assert expected[0] == 0x20
        assert expected[1] == 0x0B
        assert codec.encode(m) == expected

    def test_floor_request_with_floor_id(self):
        m = BfcpMessage.build(
            Primitive.FLOOR_REQUEST, 9, 3, 100, [Attribute(AttributeKind.FLOOR_ID, 1)]
        )
        expected = ref_header(1, 1, 9, 3, 100) + ref_attr(2, struct.pack(">H", 1))
        assert len(expected) == 16
        assert codec.encode(m) == expected

    def test_zero_attributes_zero_payload_length(self):
        m = BfcpMessage.build(Primitive.CHAIR_ACTION_ACK, 5, 1, 6)
        assert m.header.payload_length == 0
        assert len(codec.encode(m)) == 12

    def test_request_status_attribute(self):
        m = BfcpMessage.build(
            Primitive.CHAIR_ACTION,
            1,
            5,
            3,
            [
                Attribute(AttributeKind.FLOOR_REQUEST_ID, 7),
                Attribute(
                    AttributeKind.REQUEST_STATUS, RequestStatusValue(RequestStatus.GRANTED, 0)
                ),
            ],
        )
        expected = (
            ref_header(9, 2, 1, 5, 3)
            + ref_attr(3, struct.pack(">H", 7))
            + ref_attr(5, bytes([3, 0]))
        )
        assert codec.encode(m) == expected

    def test_text_attribute_padding(self):
        m = BfcpMessage.build(
            Primitive.FLOOR_REQUEST,
            1,
            1,
            1,
            [
                Attribute(AttributeKind.FLOOR_ID, 2),
                Attribute(AttributeKind.PARTICIPANT_PROVIDED_INFO, "spromano"),
            ],
        )
        expected = (
            ref_header(1, 4, 1, 1, 1)
            + ref_attr(2, struct.pack(">H", 2))
            + ref_attr(8, b"spromano")
        )
        got = codec.encode(m)
        assert got == expected
        assert len(got) % 4 == 0

    def test_grouped_attribute_layout(self):
        m = BfcpMessage.build(
            Primitive.FLOOR_REQUEST_STATUS,
            1,
            2,
            3,
            [
                Attribute(
                    AttributeKind.FLOOR_REQUEST_INFORMATION,
                    GroupedValue(
                        9,
                        (
                            Attribute(
                                AttributeKind.OVERALL_REQUEST_STATUS,
                                GroupedValue(
                                    9,
                                    (
                                        Attribute(
                                            AttributeKind.REQUEST_STATUS,
                                            RequestStatusValue(RequestStatus.PENDING, 2),
                                        ),
                                    ),
                                ),
                            ),
                            Attribute(AttributeKind.FLOOR_REQUEST_STATUS, GroupedValue(1)),
                        ),
                    ),
                )
            ],
        )
        inner_status = ref_attr(5, bytes([1, 2]))
        overall = ref_attr(18, struct.pack(">H", 9) + inner_status)
        floor_part = ref_attr(17, struct.pack(">H", 1))
        info = ref_attr(15, struct.pack(">H", 9) + overall + floor_part)
        expected = ref_header(4, len(info) // 4, 1, 2, 3) + info
        assert codec.encode(m) == expected

    def test_error_code_attribute_odd_length_padded(self):
        m = BfcpMessage.build(
            Primitive.ERROR, 1, 1, 1, [Attribute(AttributeKind.ERROR_CODE, ErrorCodeValue(4))]
        )
        expected = ref_header(13, 1, 1, 1, 1) + ref_attr(6, bytes([4]))
        assert codec.encode(m) == expected

    def test_priority_attribute_top_bits(self):
        m = BfcpMessage.build(
            Primitive.FLOOR_REQUEST,
            1,
            1,
            1,
            [Attribute(AttributeKind.FLOOR_ID, 1), Attribute(AttributeKind.PRIORITY, 4)],
        )
        expected = (
            ref_header(1, 2, 1, 1, 1)
            + ref_attr(2, struct.pack(">H", 1))
            + ref_attr(4, bytes([4 << 5, 0]))
        )
        assert codec.encode(m) == expected


class TestEncodeErrors:
    def test_attribute_illegal_for_primitive(self):
        m = BfcpMessage.build(
            Primitive.HELLO, 1, 1, 1, [Attribute(AttributeKind.FLOOR_ID, 1)]
        )
        with pytest.raises(model.InvalidMessage, match="illegal"):
            codec.encode(m)

    def test_value_out_of_range(self):
        m = BfcpMessage.build(
            Primitive.FLOOR_REQUEST, 1, 1, 1, [Attribute(AttributeKind.FLOOR_ID, 0x10000)]
        )
        with pytest.raises(model.InvalidMessage):
            codec.encode(m)

    def test_priority_out_of_range(self):
        m = BfcpMessage.build(
            Primitive.FLOOR_REQUEST,
            1,
            1,
            1,
            [Attribute(AttributeKind.FLOOR_ID, 1), Attribute(AttributeKind.PRIORITY, 8)],
        )
        with pytest.raises(model.InvalidMessage):
            codec.encode(m)

    def test_unknown_primitive_value(self):
        header = model.CommonHeader(
            primitive=99, conference_id=1, transaction_id=1, user_id=1  # type: ignore[arg-type]
        )
        with pytest.raises(model.InvalidMessage):
            codec.encode(BfcpMessage(header=header))

    def test_stale_payload_length_rejected(self):
        m = BfcpMessage.build(Primitive.FLOOR_REQUEST, 1, 1, 1, [Attribute(AttributeKind.FLOOR_ID, 1)])
        stale = BfcpMessage(
            header=model.CommonHeader(
                primitive=Primitive.FLOOR_REQUEST,
                conference_id=1,
                transaction_id=1,
                user_id=1,
                payload_length=0,
            ),
            attributes=m.attributes,
        )
        with pytest.raises(model.InvalidMessage, match="payload_length"):
            codec.encode(stale)

    def test_oversized_text_attribute(self):
        m = BfcpMessage.build(
            Primitive.FLOOR_REQUEST,
            1,
            1,
            1,
            [Attribute(AttributeKind.PARTICIPANT_PROVIDED_INFO, "x" * 300)],
        )
        with pytest.raises(model.InvalidMessage, match="255"):
            codec.encode(m)


class TestDecode:
    def test_roundtrip_hello(self):
        m = msgs.hello(1, 7, 2)
        assert codec.decode(codec.encode(m)) == m

    def test_eleven_zero_octets_truncated(self):
        with pytest.raises(model.Truncated):
            codec.decode(b"\x00" * 11)

    def test_twelve_zero_octets_bad_version(self):
        with pytest.raises(model.BadVersion):
            codec.decode(b"\x00" * 12)

    def test_unknown_primitive(self):
        data = ref_header(14, 0, 1, 2, 3)
        with pytest.raises(model.UnknownPrimitive) as exc:
            codec.decode(data)
        assert exc.value.conference_id == 1
        assert exc.value.transaction_id == 2
        assert exc.value.user_id == 3

    def test_payload_cap(self):
        data = ref_header(11, 0xFFFF, 1, 1, 1)
        with pytest.raises(model.Truncated):
            codec.decode(data)

    def test_truncated_payload(self):
        data = ref_header(1, 1, 1, 1, 1) + b"\x00\x00"
        with pytest.raises(model.Truncated):
            codec.decode(data)

    def test_trailing_octets(self):
        data = codec.encode(msgs.hello(1, 1, 1)) + b"\x00\x00\x00\x00"
        with pytest.raises(model.MalformedAttribute):
            codec.decode(data)

    def test_attribute_overruns_block(self):
        bad_attr = struct.pack(">BB", (2 << 1) | 1, 40) + b"\x00\x00"
        data = ref_header(1, 1, 1, 1, 1) + bad_attr
        with pytest.raises(model.MalformedAttribute):
            codec.decode(data)

    def test_attribute_length_below_header(self):
        bad_attr = struct.pack(">BB", (2 << 1) | 1, 1) + b"\x00\x00"
        data = ref_header(1, 1, 1, 1, 1) + bad_attr
        with pytest.raises(model.MalformedAttribute):
            codec.decode(data)

    def test_unknown_mandatory_attribute_distinct(self):
        data = ref_header(1, 1, 1, 5, 1) + ref_attr(99, b"\x00\x00", mandatory=True)
        with pytest.raises(model.UnknownMandatoryAttribute) as exc:
            codec.decode(data)
        assert exc.value.kind == 99
        assert exc.value.transaction_id == 5

    def test_unknown_optional_attribute_preserved(self):
        data = ref_header(1, 1, 1, 1, 1) + ref_attr(99, b"\xab\xcd", mandatory=False)
        m = codec.decode(data)
        assert m.attributes[0].kind == 99
        assert m.attributes[0].value == b"\xab\xcd"
        assert not m.attributes[0].mandatory
        assert codec.encode(m) == data

    def test_bad_request_status_code(self):
        data = ref_header(4, 1, 1, 1, 1) + ref_attr(5, bytes([8, 0]))
        with pytest.raises(model.MalformedAttribute):
            codec.decode(data)

    def test_invalid_utf8_text(self):
        data = ref_header(1, 1, 1, 1, 1) + ref_attr(8, b"\xff\xfe")
        with pytest.raises(model.MalformedAttribute):
            codec.decode(data)

    def test_nesting_depth_capped(self):
        # Five levels of grouped nesting; the cap is four.
        inner = ref_attr(15, struct.pack(">H", 1))
        for _ in range(4):
            inner = ref_attr(15, struct.pack(">H", 1) + inner)
        data = ref_header(4, len(inner) // 4, 1, 1, 1) + inner
        with pytest.raises(model.MalformedAttribute, match="deep"):
            codec.decode(data)

    def test_reserved_header_bits_ignored(self):
        data = bytearray(codec.encode(msgs.hello(1, 7, 2)))
        data[0] |= 0x1F
        m = codec.decode(bytes(data))
        assert m.header.primitive == Primitive.HELLO


class TestMessageViews:
    def test_status_views_extracts_fields(self):
        m = msgs.floor_status(
            1, 2, 0, 4, [(7, 101, RequestStatus.PENDING, 1, "User1")]
        )
        decoded = codec.decode(codec.encode(m))
        (view,) = msgs.status_views(decoded)
        assert view.floor_request_id == 7
        assert view.owner_id == 101
        assert view.status == RequestStatus.PENDING
        assert view.queue_position == 1
        assert view.floor_id == 4
        assert view.display_name == "User1"

    def test_chair_action_target_flat_and_grouped(self):
        flat = msgs.chair_action(1, 3, 2, 9, RequestStatus.ACCEPTED)
        assert msgs.chair_action_target(codec.decode(codec.encode(flat))) == (
            9,
            RequestStatus.ACCEPTED,
        )
        grouped = BfcpMessage.build(
            Primitive.CHAIR_ACTION,
            1,
            3,
            2,
            [
                Attribute(
                    AttributeKind.FLOOR_REQUEST_INFORMATION,
                    GroupedValue(
                        9,
                        (
                            Attribute(
                                AttributeKind.OVERALL_REQUEST_STATUS,
                                GroupedValue(
                                    9,
                                    (
                                        Attribute(
                                            AttributeKind.REQUEST_STATUS,
                                            RequestStatusValue(RequestStatus.REVOKED, 0),
                                        ),
                                    ),
                                ),
                            ),
                        ),
                    ),
                )
            ],
        )
        assert msgs.chair_action_target(codec.decode(codec.encode(grouped))) == (
            9,
            RequestStatus.REVOKED,
        )
