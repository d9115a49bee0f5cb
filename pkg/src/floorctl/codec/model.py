"""Message model for the binary floor-control wire format.

The format is a TLV layout carried over a stream transport. All multi-octet
fields are big-endian (network order).

Common header (12 octets)::

     0                   1                   2                   3
     0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
    | Ver |Reserved |   Primitive   |        Payload Length         |
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
    |                         Conference ID                         |
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
    |        Transaction ID         |            User ID            |
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+

Payload Length counts 4-octet words of attribute data following the header.

Attribute::

    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+- ...
    |     Type    |M|    Length     |  Contents   ...
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+- ...

Type is 7 bits, the mandatory bit M is the least significant bit of the
first octet. Length covers type + length + contents in octets, before
padding; every attribute is zero-padded to a 4-octet boundary. Grouped
attributes carry a 16-bit header field followed by nested attributes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

HEADER_SIZE = 12
VERSION = 1

# Adversarial headers can declare up to 256 KiB of payload; refuse anything
# over 16 KiB, far above any legal message in this profile.
MAX_PAYLOAD_WORDS = 4096

# Grouped attributes nest two levels deep in practice; anything deeper is
# hostile input, and an explicit cap keeps the parsers stack-safe.
MAX_GROUP_DEPTH = 4

# An attribute length field is one octet, so type+length+contents <= 255.
MAX_ATTRIBUTE_LENGTH = 255


class Primitive(IntEnum):
    FLOOR_REQUEST = 1
    FLOOR_RELEASE = 2
    FLOOR_REQUEST_QUERY = 3
    FLOOR_REQUEST_STATUS = 4
    USER_QUERY = 5
    USER_STATUS = 6
    FLOOR_QUERY = 7
    FLOOR_STATUS = 8
    CHAIR_ACTION = 9
    CHAIR_ACTION_ACK = 10
    HELLO = 11
    HELLO_ACK = 12
    ERROR = 13


class AttributeKind(IntEnum):
    BENEFICIARY_ID = 1
    FLOOR_ID = 2
    FLOOR_REQUEST_ID = 3
    PRIORITY = 4
    REQUEST_STATUS = 5
    ERROR_CODE = 6
    PARTICIPANT_PROVIDED_INFO = 8
    BENEFICIARY_INFORMATION = 14
    FLOOR_REQUEST_INFORMATION = 15
    REQUESTED_BY_INFORMATION = 16
    FLOOR_REQUEST_STATUS = 17
    OVERALL_REQUEST_STATUS = 18


class RequestStatus(IntEnum):
    PENDING = 1
    ACCEPTED = 2
    GRANTED = 3
    DENIED = 4
    CANCELLED = 5
    RELEASED = 6
    REVOKED = 7


class ErrorCode(IntEnum):
    CONFERENCE_DOES_NOT_EXIST = 1
    USER_DOES_NOT_EXIST = 2
    UNKNOWN_PRIMITIVE = 3
    UNKNOWN_MANDATORY_ATTRIBUTE = 4
    UNAUTHORIZED_OPERATION = 5
    INVALID_FLOOR_ID = 6
    FLOOR_REQUEST_ID_DOES_NOT_EXIST = 7
    MAX_FLOOR_REQUESTS_REACHED = 8


U16_KINDS = frozenset(
    {AttributeKind.BENEFICIARY_ID, AttributeKind.FLOOR_ID, AttributeKind.FLOOR_REQUEST_ID}
)
TEXT_KINDS = frozenset({AttributeKind.PARTICIPANT_PROVIDED_INFO})
GROUPED_KINDS = frozenset(
    {
        AttributeKind.BENEFICIARY_INFORMATION,
        AttributeKind.FLOOR_REQUEST_INFORMATION,
        AttributeKind.REQUESTED_BY_INFORMATION,
        AttributeKind.FLOOR_REQUEST_STATUS,
        AttributeKind.OVERALL_REQUEST_STATUS,
    }
)
KNOWN_KINDS = frozenset(AttributeKind)


class CodecError(Exception):
    """Base class for all codec failures."""


class InvalidMessage(CodecError):
    """Message violates a type invariant and cannot be encoded."""


class DecodeError(CodecError):
    """Input octets do not form a valid message.

    When the common header itself was parseable, its fields are attached so
    a server can still address an Error reply to the sender.
    """

    def __init__(
        self,
        msg: str,
        *,
        primitive_octet: int | None = None,
        conference_id: int | None = None,
        transaction_id: int | None = None,
        user_id: int | None = None,
    ):
        super().__init__(msg)
        self.primitive_octet = primitive_octet
        self.conference_id = conference_id
        self.transaction_id = transaction_id
        self.user_id = user_id


class Truncated(DecodeError):
    """Fewer octets than header plus declared payload (or payload over cap)."""


class BadVersion(DecodeError):
    """Version field is not 1."""


class UnknownPrimitive(DecodeError):
    """Primitive octet outside the defined opcode table."""


class MalformedAttribute(DecodeError):
    """Attribute structure is inconsistent with the block that contains it."""


class UnknownMandatoryAttribute(MalformedAttribute):
    """Unknown attribute with the mandatory bit set.

    Reported distinctly so a server can answer with a protocol-level Error
    instead of dropping the connection.
    """

    def __init__(self, msg: str, kind: int = 0, **kw):
        super().__init__(msg, **kw)
        self.kind = kind


class StreamClosed(DecodeError):
    """Stream ended with a partial message buffered."""


@dataclass(frozen=True, slots=True)
class RequestStatusValue:
    status: RequestStatus
    queue_position: int = 0


@dataclass(frozen=True, slots=True)
class ErrorCodeValue:
    code: int
    details: bytes = b""


@dataclass(frozen=True, slots=True)
class GroupedValue:
    """Grouped attribute payload: a 16-bit header field plus sub-attributes.

    The header field is the floor, floor-request or user id the group is
    about, depending on the attribute kind.
    """

    header: int
    attributes: tuple["Attribute", ...] = ()


AttributeValue = int | str | bytes | RequestStatusValue | ErrorCodeValue | GroupedValue


@dataclass(frozen=True, slots=True)
class Attribute:
    kind: int
    value: AttributeValue
    mandatory: bool = True


@dataclass(frozen=True, slots=True)
class CommonHeader:
    primitive: Primitive
    conference_id: int
    transaction_id: int
    user_id: int
    payload_length: int = 0
    version: int = VERSION


@dataclass(frozen=True, slots=True)
class BfcpMessage:
    header: CommonHeader
    attributes: tuple[Attribute, ...] = ()

    @classmethod
    def build(
        cls,
        primitive: Primitive,
        conference_id: int,
        transaction_id: int,
        user_id: int,
        attributes: tuple[Attribute, ...] | list[Attribute] = (),
    ) -> "BfcpMessage":
        """Assemble a message with payload_length computed from the attributes."""
        attrs = tuple(attributes)
        words = sum(encoded_attribute_size(a) for a in attrs) // 4
        header = CommonHeader(
            primitive=primitive,
            conference_id=conference_id,
            transaction_id=transaction_id,
            user_id=user_id,
            payload_length=words,
        )
        return cls(header=header, attributes=attrs)

    def first(self, kind: int) -> Attribute | None:
        for a in self.attributes:
            if a.kind == kind:
                return a
        return None


# Top-level attributes each primitive may carry. Unknown kinds (raw bytes
# values) are always allowed; they are opaque extension data.
ALLOWED_ATTRIBUTES: dict[Primitive, frozenset[AttributeKind]] = {
    Primitive.FLOOR_REQUEST: frozenset(
        {
            AttributeKind.FLOOR_ID,
            AttributeKind.BENEFICIARY_ID,
            AttributeKind.PRIORITY,
            AttributeKind.PARTICIPANT_PROVIDED_INFO,
        }
    ),
    Primitive.FLOOR_RELEASE: frozenset({AttributeKind.FLOOR_REQUEST_ID}),
    Primitive.FLOOR_REQUEST_QUERY: frozenset({AttributeKind.FLOOR_REQUEST_ID}),
    Primitive.FLOOR_REQUEST_STATUS: frozenset({AttributeKind.FLOOR_REQUEST_INFORMATION}),
    Primitive.USER_QUERY: frozenset({AttributeKind.BENEFICIARY_ID}),
    Primitive.USER_STATUS: frozenset(
        {AttributeKind.BENEFICIARY_INFORMATION, AttributeKind.FLOOR_REQUEST_INFORMATION}
    ),
    Primitive.FLOOR_QUERY: frozenset({AttributeKind.FLOOR_ID}),
    Primitive.FLOOR_STATUS: frozenset(
        {AttributeKind.FLOOR_ID, AttributeKind.FLOOR_REQUEST_INFORMATION}
    ),
    Primitive.CHAIR_ACTION: frozenset(
        {
            AttributeKind.FLOOR_REQUEST_ID,
            AttributeKind.REQUEST_STATUS,
            AttributeKind.FLOOR_REQUEST_INFORMATION,
        }
    ),
    Primitive.CHAIR_ACTION_ACK: frozenset(),
    Primitive.HELLO: frozenset({AttributeKind.PARTICIPANT_PROVIDED_INFO}),
    Primitive.HELLO_ACK: frozenset(),
    Primitive.ERROR: frozenset(
        {AttributeKind.ERROR_CODE, AttributeKind.PARTICIPANT_PROVIDED_INFO}
    ),
}


def _validate_attribute(attr: Attribute, depth: int) -> int:
    """Check one attribute; returns its padded encoded size in octets."""
    kind = attr.kind
    value = attr.value
    if not isinstance(kind, int) or not 0 <= kind <= 127:
        raise InvalidMessage(f"attribute kind {kind!r} outside 7-bit range")
    if kind in U16_KINDS:
        if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value <= 0xFFFF:
            raise InvalidMessage(f"attribute {kind} needs a 16-bit integer value")
        content_len = 2
    elif kind == AttributeKind.PRIORITY:
        if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value <= 7:
            raise InvalidMessage("priority value must be 0..7")
        content_len = 2
    elif kind == AttributeKind.REQUEST_STATUS:
        if not isinstance(value, RequestStatusValue):
            raise InvalidMessage("REQUEST-STATUS needs a RequestStatusValue")
        if value.status not in tuple(RequestStatus):
            raise InvalidMessage(f"unknown request status {value.status!r}")
        if not 0 <= value.queue_position <= 255:
            raise InvalidMessage("queue position must fit one octet")
        content_len = 2
    elif kind == AttributeKind.ERROR_CODE:
        if not isinstance(value, ErrorCodeValue):
            raise InvalidMessage("ERROR-CODE needs an ErrorCodeValue")
        if not 0 <= value.code <= 255:
            raise InvalidMessage("error code must fit one octet")
        content_len = 1 + len(value.details)
    elif kind in TEXT_KINDS:
        if not isinstance(value, str):
            raise InvalidMessage(f"attribute {kind} needs a text value")
        content_len = len(value.encode("utf-8"))
    elif kind in GROUPED_KINDS:
        if not isinstance(value, GroupedValue):
            raise InvalidMessage(f"attribute {kind} needs a GroupedValue")
        if depth + 1 > MAX_GROUP_DEPTH:
            raise InvalidMessage("grouped attribute nesting too deep")
        if not 0 <= value.header <= 0xFFFF:
            raise InvalidMessage("grouped header field must be a 16-bit integer")
        content_len = 2
        for sub in value.attributes:
            content_len += _validate_attribute(sub, depth + 1)
    else:
        # Unknown kind: opaque contents, preserved as-is.
        if not isinstance(value, (bytes, bytearray)):
            raise InvalidMessage(f"unknown attribute kind {kind} needs a bytes value")
        content_len = len(value)
    length = 2 + content_len
    if length > MAX_ATTRIBUTE_LENGTH:
        raise InvalidMessage(f"attribute {kind} encodes to {length} octets, above 255")
    return (length + 3) & ~3


def validate_message(msg: BfcpMessage) -> int:
    """Validate all type invariants; returns the attribute block size in octets.

    Raises InvalidMessage on any violation. Both codec implementations call
    this before packing.
    """
    h = msg.header
    if h.version != VERSION:
        raise InvalidMessage(f"version must be {VERSION}")
    try:
        primitive = Primitive(h.primitive)
    except ValueError:
        raise InvalidMessage(f"unknown primitive {h.primitive!r}") from None
    if not 0 <= h.conference_id <= 0xFFFFFFFF:
        raise InvalidMessage("conference_id must be a 32-bit integer")
    if not 0 <= h.transaction_id <= 0xFFFF:
        raise InvalidMessage("transaction_id must be a 16-bit integer")
    if not 0 <= h.user_id <= 0xFFFF:
        raise InvalidMessage("user_id must be a 16-bit integer")
    allowed = ALLOWED_ATTRIBUTES[primitive]
    block = 0
    for attr in msg.attributes:
        if attr.kind in KNOWN_KINDS and attr.kind not in allowed:
            raise InvalidMessage(
                f"attribute {AttributeKind(attr.kind).name} illegal for {primitive.name}"
            )
        block += _validate_attribute(attr, depth=1)
    if block != h.payload_length * 4:
        raise InvalidMessage(
            f"payload_length {h.payload_length} does not match attribute block "
            f"of {block} octets (use BfcpMessage.build)"
        )
    if h.payload_length > MAX_PAYLOAD_WORDS:
        raise InvalidMessage("attribute block exceeds the 16 KiB payload cap")
    return block


def encoded_attribute_size(attr: Attribute) -> int:
    """Padded wire size of one attribute, in octets.

    Sizes are shape-based only; range violations surface later, in encode.
    """
    kind = attr.kind
    value = attr.value
    if kind in U16_KINDS or kind == AttributeKind.PRIORITY or kind == AttributeKind.REQUEST_STATUS:
        content_len = 2
    elif kind == AttributeKind.ERROR_CODE:
        if not isinstance(value, ErrorCodeValue):
            raise InvalidMessage("ERROR-CODE needs an ErrorCodeValue")
        content_len = 1 + len(value.details)
    elif kind in TEXT_KINDS:
        if not isinstance(value, str):
            raise InvalidMessage(f"attribute {kind} needs a text value")
        content_len = len(value.encode("utf-8"))
    elif kind in GROUPED_KINDS:
        if not isinstance(value, GroupedValue):
            raise InvalidMessage(f"attribute {kind} needs a GroupedValue")
        content_len = 2 + sum(encoded_attribute_size(sub) for sub in value.attributes)
    else:
        if not isinstance(value, (bytes, bytearray)):
            raise InvalidMessage(f"unknown attribute kind {kind} needs a bytes value")
        content_len = len(value)
    length = 2 + content_len
    return (length + 3) & ~3
