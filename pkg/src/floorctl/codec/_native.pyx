# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled encoder/decoder for the binary floor-control wire format.

Hot-path twin of ``_pure``: same message model, same typed errors, identical
octets. The pure module is the reference; any divergence here is a bug.
"""

from libc.string cimport memcpy, memset

from .model import (
    MAX_GROUP_DEPTH,
    MAX_PAYLOAD_WORDS,
    Attribute,
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

cdef enum:
    K_BENEFICIARY_ID = 1
    K_FLOOR_ID = 2
    K_FLOOR_REQUEST_ID = 3
    K_PRIORITY = 4
    K_REQUEST_STATUS = 5
    K_ERROR_CODE = 6
    K_PARTICIPANT_PROVIDED_INFO = 8
    K_BENEFICIARY_INFORMATION = 14
    K_FLOOR_REQUEST_INFORMATION = 15
    K_REQUESTED_BY_INFORMATION = 16
    K_FLOOR_REQUEST_STATUS = 17
    K_OVERALL_REQUEST_STATUS = 18

cdef enum:
    HEADER_SIZE = 12
    WIRE_VERSION = 1


cdef inline bint _is_u16_kind(int kind):
    return kind == K_BENEFICIARY_ID or kind == K_FLOOR_ID or kind == K_FLOOR_REQUEST_ID


cdef inline bint _is_grouped_kind(int kind):
    return K_BENEFICIARY_INFORMATION <= kind <= K_OVERALL_REQUEST_STATUS


cdef Py_ssize_t _pack_attr(object attr, unsigned char* buf, Py_ssize_t pos) except -1:
    cdef int kind = attr.kind
    cdef Py_ssize_t start = pos
    cdef Py_ssize_t length, n
    cdef unsigned int u16
    cdef const unsigned char* src
    cdef bytes raw
    cdef object value = attr.value

    buf[pos] = <unsigned char> ((kind << 1) | (1 if attr.mandatory else 0))
    pos += 2  # length at start+1 patched below

    if _is_u16_kind(kind):
        u16 = value
        buf[pos] = <unsigned char> (u16 >> 8)
        buf[pos + 1] = <unsigned char> (u16 & 0xFF)
        pos += 2
    elif kind == K_PRIORITY:
        buf[pos] = <unsigned char> ((<unsigned int> value) << 5)
        buf[pos + 1] = 0
        pos += 2
    elif kind == K_REQUEST_STATUS:
        buf[pos] = <unsigned char> (<unsigned int> value.status)
        buf[pos + 1] = <unsigned char> (<unsigned int> value.queue_position)
        pos += 2
    elif kind == K_ERROR_CODE:
        buf[pos] = <unsigned char> (<unsigned int> value.code)
        pos += 1
        raw = value.details
        n = len(raw)
        if n:
            src = raw
            memcpy(buf + pos, src, n)
            pos += n
    elif kind == K_PARTICIPANT_PROVIDED_INFO:
        raw = value.encode("utf-8")
        n = len(raw)
        if n:
            src = raw
            memcpy(buf + pos, src, n)
            pos += n
    elif _is_grouped_kind(kind):
        u16 = value.header
        buf[pos] = <unsigned char> (u16 >> 8)
        buf[pos + 1] = <unsigned char> (u16 & 0xFF)
        pos += 2
        for sub in value.attributes:
            pos = _pack_attr(sub, buf, pos)
    else:
        raw = bytes(value)
        n = len(raw)
        if n:
            src = raw
            memcpy(buf + pos, src, n)
            pos += n

    length = pos - start
    buf[start + 1] = <unsigned char> length
    n = (-length) & 3
    if n:
        memset(buf + pos, 0, n)
        pos += n
    return pos


def encode(object msg) -> bytes:
    """Encode to the canonical octet sequence (see ``_pure.encode``)."""
    cdef Py_ssize_t block_size = validate_message(msg)
    cdef object header = msg.header
    cdef bytearray out = bytearray(HEADER_SIZE + block_size)
    cdef unsigned char* buf = out
    cdef unsigned int conf = header.conference_id
    cdef unsigned int tx = header.transaction_id
    cdef unsigned int user = header.user_id
    cdef unsigned int words = block_size // 4

    buf[0] = WIRE_VERSION << 5
    buf[1] = <unsigned char> (<unsigned int> header.primitive)
    buf[2] = <unsigned char> (words >> 8)
    buf[3] = <unsigned char> (words & 0xFF)
    buf[4] = <unsigned char> (conf >> 24)
    buf[5] = <unsigned char> ((conf >> 16) & 0xFF)
    buf[6] = <unsigned char> ((conf >> 8) & 0xFF)
    buf[7] = <unsigned char> (conf & 0xFF)
    buf[8] = <unsigned char> (tx >> 8)
    buf[9] = <unsigned char> (tx & 0xFF)
    buf[10] = <unsigned char> (user >> 8)
    buf[11] = <unsigned char> (user & 0xFF)

    cdef Py_ssize_t pos = HEADER_SIZE
    for attr in msg.attributes:
        pos = _pack_attr(attr, buf, pos)
    return bytes(out)


cdef tuple _parse_attributes(
    const unsigned char* block, Py_ssize_t end, int depth, dict ctx
):
    cdef list attrs = []
    cdef Py_ssize_t pos = 0
    cdef int kind, length
    cdef bint mandatory
    cdef Py_ssize_t clen
    cdef const unsigned char* contents
    cdef object value

    while pos < end:
        if end - pos < 2:
            raise MalformedAttribute("dangling octets in attribute block", **ctx)
        kind = block[pos] >> 1
        mandatory = block[pos] & 1
        length = block[pos + 1]
        if length < 2:
            raise MalformedAttribute(f"attribute length {length} below header size", **ctx)
        if pos + length > end:
            raise MalformedAttribute("attribute length overruns block", **ctx)
        contents = block + pos + 2
        clen = length - 2

        if _is_u16_kind(kind):
            if clen != 2:
                raise MalformedAttribute(f"attribute {kind} needs 2 content octets", **ctx)
            value = <unsigned int> ((contents[0] << 8) | contents[1])
        elif kind == K_PRIORITY:
            if clen != 2:
                raise MalformedAttribute("PRIORITY needs 2 content octets", **ctx)
            value = <unsigned int> (contents[0] >> 5)
        elif kind == K_REQUEST_STATUS:
            if clen != 2:
                raise MalformedAttribute("REQUEST-STATUS needs 2 content octets", **ctx)
            if not 1 <= contents[0] <= 7:
                raise MalformedAttribute(f"unknown request status {contents[0]}", **ctx)
            value = RequestStatusValue(RequestStatus(contents[0]), contents[1])
        elif kind == K_ERROR_CODE:
            if clen < 1:
                raise MalformedAttribute("ERROR-CODE needs at least 1 content octet", **ctx)
            value = ErrorCodeValue(contents[0], contents[1:clen])
        elif kind == K_PARTICIPANT_PROVIDED_INFO:
            try:
                value = contents[:clen].decode("utf-8")
            except UnicodeDecodeError:
                raise MalformedAttribute(f"attribute {kind} is not valid UTF-8", **ctx) from None
        elif _is_grouped_kind(kind):
            if clen < 2:
                raise MalformedAttribute(f"grouped attribute {kind} too short", **ctx)
            if depth + 1 > MAX_GROUP_DEPTH:
                raise MalformedAttribute("grouped attribute nesting too deep", **ctx)
            value = GroupedValue(
                (contents[0] << 8) | contents[1],
                _parse_attributes(contents + 2, clen - 2, depth + 1, ctx),
            )
        elif mandatory:
            raise UnknownMandatoryAttribute(
                f"unknown mandatory attribute kind {kind}", kind=kind, **ctx
            )
        else:
            value = contents[:clen]
        attrs.append(Attribute(kind=kind, value=value, mandatory=mandatory))
        pos += (length + 3) & ~3
    return tuple(attrs)


def decode(bytes data) -> object:
    """Decode exactly one message from ``data`` (see ``_pure.decode``)."""
    cdef Py_ssize_t n = len(data)
    if n < HEADER_SIZE:
        raise Truncated(f"need {HEADER_SIZE} header octets, got {n}")
    cdef const unsigned char* d = data
    cdef int version = d[0] >> 5
    cdef int primitive_octet = d[1]
    cdef unsigned int payload_words = (d[2] << 8) | d[3]
    cdef unsigned int conference_id = (
        (<unsigned int> d[4] << 24) | (d[5] << 16) | (d[6] << 8) | d[7]
    )
    cdef unsigned int transaction_id = (d[8] << 8) | d[9]
    cdef unsigned int user_id = (d[10] << 8) | d[11]
    cdef dict ctx = {
        "primitive_octet": primitive_octet,
        "conference_id": conference_id,
        "transaction_id": transaction_id,
        "user_id": user_id,
    }
    if version != WIRE_VERSION:
        raise BadVersion(f"unsupported version {version}")
    try:
        primitive = Primitive(primitive_octet)
    except ValueError:
        raise UnknownPrimitive(f"unknown primitive {primitive_octet}", **ctx) from None
    if payload_words > MAX_PAYLOAD_WORDS:
        raise Truncated(
            f"declared payload of {payload_words} words exceeds the 16 KiB cap", **ctx
        )
    cdef Py_ssize_t expected = HEADER_SIZE + payload_words * 4
    if n < expected:
        raise Truncated(f"declared {expected} octets, got {n}", **ctx)
    if n > expected:
        raise MalformedAttribute(
            f"{n - expected} trailing octets after attribute block", **ctx
        )
    attrs = _parse_attributes(d + HEADER_SIZE, expected - HEADER_SIZE, 1, ctx)
    header = CommonHeader(
        primitive=primitive,
        conference_id=conference_id,
        transaction_id=transaction_id,
        user_id=user_id,
        payload_length=payload_words,
    )
    return BfcpMessage(header=header, attributes=attrs)
