"""Pure-Python encoder/decoder.

Reference implementation of the wire format; the compiled module in
``_native.pyx`` must be byte-for-byte equivalent. Selection between the two
happens in the package ``__init__``.
"""

from __future__ import annotations

import struct

from .model import (
    GROUPED_KINDS,
    HEADER_SIZE,
    MAX_GROUP_DEPTH,
    MAX_PAYLOAD_WORDS,
    TEXT_KINDS,
    U16_KINDS,
    VERSION,
    Attribute,
    AttributeKind,
    BadVersion,
    BfcpMessage,
    CommonHeader,
    ErrorCodeValue,
    GroupedValue,
    MalformedAttribute,
    Primitive,
    RequestStatus,
    RequestStatusValue,
    Truncated,
    UnknownMandatoryAttribute,
    UnknownPrimitive,
    validate_message,
)

_HEADER = struct.Struct(">BBHIHH")


def _pack_attribute(attr: Attribute, out: bytearray) -> None:
    kind = attr.kind
    value = attr.value
    start = len(out)
    out.append((kind << 1) | (1 if attr.mandatory else 0))
    out.append(0)  # length, patched below
    if kind in U16_KINDS:
        out += value.to_bytes(2, "big")
    elif kind == AttributeKind.PRIORITY:
        out.append(value << 5)
        out.append(0)
    elif kind == AttributeKind.REQUEST_STATUS:
        out.append(value.status)
        out.append(value.queue_position)
    elif kind == AttributeKind.ERROR_CODE:
        out.append(value.code)
        out += value.details
    elif kind in TEXT_KINDS:
        out += value.encode("utf-8")
    elif kind in GROUPED_KINDS:
        out += value.header.to_bytes(2, "big")
        for sub in value.attributes:
            _pack_attribute(sub, out)
    else:
        out += value
    length = len(out) - start
    out[start + 1] = length
    out += b"\x00" * (-length % 4)


def encode(msg: BfcpMessage) -> bytes:
    """Encode to the canonical octet sequence.

    payload_length is recomputed from the attribute block; raises
    InvalidMessage if the message violates any type invariant.
    """
    block_size = validate_message(msg)
    h = msg.header
    out = bytearray(
        _HEADER.pack(
            VERSION << 5,
            h.primitive,
            block_size // 4,
            h.conference_id,
            h.transaction_id,
            h.user_id,
        )
    )
    for attr in msg.attributes:
        _pack_attribute(attr, out)
    return bytes(out)


def _parse_attributes(
    block: memoryview, depth: int, ctx: dict
) -> tuple[Attribute, ...]:
    attrs = []
    pos = 0
    end = len(block)
    while pos < end:
        if end - pos < 2:
            raise MalformedAttribute("dangling octets in attribute block", **ctx)
        first = block[pos]
        kind = first >> 1
        mandatory = bool(first & 1)
        length = block[pos + 1]
        if length < 2:
            raise MalformedAttribute(f"attribute length {length} below header size", **ctx)
        if pos + length > end:
            raise MalformedAttribute("attribute length overruns block", **ctx)
        contents = block[pos + 2 : pos + length]
        value: object
        if kind in U16_KINDS:
            if len(contents) != 2:
                raise MalformedAttribute(f"attribute {kind} needs 2 content octets", **ctx)
            value = (contents[0] << 8) | contents[1]
        elif kind == AttributeKind.PRIORITY:
            if len(contents) != 2:
                raise MalformedAttribute("PRIORITY needs 2 content octets", **ctx)
            value = contents[0] >> 5
        elif kind == AttributeKind.REQUEST_STATUS:
            if len(contents) != 2:
                raise MalformedAttribute("REQUEST-STATUS needs 2 content octets", **ctx)
            if not 1 <= contents[0] <= 7:
                raise MalformedAttribute(f"unknown request status {contents[0]}", **ctx)
            value = RequestStatusValue(RequestStatus(contents[0]), contents[1])
        elif kind == AttributeKind.ERROR_CODE:
            if len(contents) < 1:
                raise MalformedAttribute("ERROR-CODE needs at least 1 content octet", **ctx)
            value = ErrorCodeValue(contents[0], bytes(contents[1:]))
        elif kind in TEXT_KINDS:
            try:
                value = bytes(contents).decode("utf-8")
            except UnicodeDecodeError:
                raise MalformedAttribute(f"attribute {kind} is not valid UTF-8", **ctx) from None
        elif kind in GROUPED_KINDS:
            if len(contents) < 2:
                raise MalformedAttribute(f"grouped attribute {kind} too short", **ctx)
            if depth + 1 > MAX_GROUP_DEPTH:
                raise MalformedAttribute("grouped attribute nesting too deep", **ctx)
            header_field = (contents[0] << 8) | contents[1]
            subattrs = _parse_attributes(contents[2:], depth + 1, ctx)
            value = GroupedValue(header_field, subattrs)
        elif mandatory:
            raise UnknownMandatoryAttribute(
                f"unknown mandatory attribute kind {kind}", kind=kind, **ctx
            )
        else:
            value = bytes(contents)
        attrs.append(Attribute(kind=kind, value=value, mandatory=mandatory))
        pos += (length + 3) & ~3
    return tuple(attrs)


def decode(data: bytes) -> BfcpMessage:
    """Decode exactly one message from ``data``.

    Safe on arbitrary input: raises a typed DecodeError, never anything else.
    """
    if len(data) < HEADER_SIZE:
        raise Truncated(f"need {HEADER_SIZE} header octets, got {len(data)}")
    version = data[0] >> 5
    primitive_octet = data[1]
    payload_words = (data[2] << 8) | data[3]
    conference_id = int.from_bytes(data[4:8], "big")
    transaction_id = (data[8] << 8) | data[9]
    user_id = (data[10] << 8) | data[11]
    ctx = {
        "primitive_octet": primitive_octet,
        "conference_id": conference_id,
        "transaction_id": transaction_id,
        "user_id": user_id,
    }
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    try:
        primitive = Primitive(primitive_octet)
    except ValueError:
        raise UnknownPrimitive(f"unknown primitive {primitive_octet}", **ctx) from None
    if payload_words > MAX_PAYLOAD_WORDS:
        raise Truncated(
            f"declared payload of {payload_words} words exceeds the 16 KiB cap", **ctx
        )
    expected = HEADER_SIZE + payload_words * 4
    if len(data) < expected:
        raise Truncated(f"declared {expected} octets, got {len(data)}", **ctx)
    if len(data) > expected:
        raise MalformedAttribute(
            f"{len(data) - expected} trailing octets after attribute block", **ctx
        )
    attrs = _parse_attributes(memoryview(data)[HEADER_SIZE:expected], 1, ctx)
    header = CommonHeader(
        primitive=primitive,
        conference_id=conference_id,
        transaction_id=transaction_id,
        user_id=user_id,
        payload_length=payload_words,
    )
    return BfcpMessage(header=header, attributes=attrs)
