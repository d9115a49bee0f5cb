"""Binary floor-control wire codec.

Two interchangeable implementations live here: a compiled extension
(``_native``, built from Cython) and a pure-Python fallback (``_pure``).
The fastest available one is selected at import; set ``FLOORCTL_PURE_CODEC=1``
to force the pure implementation. ``IMPLEMENTATION`` names the active one.
"""

import os

from .model import (
    HEADER_SIZE,
    MAX_ATTRIBUTE_LENGTH,
    MAX_GROUP_DEPTH,
    MAX_PAYLOAD_WORDS,
    Attribute,
    AttributeKind,
    BadVersion,
    BfcpMessage,
    CodecError,
    CommonHeader,
    DecodeError,
    ErrorCode,
    ErrorCodeValue,
    GroupedValue,
    InvalidMessage,
    MalformedAttribute,
    Primitive,
    RequestStatus,
    RequestStatusValue,
    StreamClosed,
    Truncated,
    UnknownMandatoryAttribute,
    UnknownPrimitive,
)

if os.environ.get("FLOORCTL_PURE_CODEC") == "1":
    from . import _pure as _impl

    IMPLEMENTATION = "pure"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        IMPLEMENTATION = "native"
    except ImportError:
        from . import _pure as _impl  # type: ignore[no-redef]

        IMPLEMENTATION = "pure"

encode = _impl.encode
decode = _impl.decode

from .framing import FrameReader, read_frames  # noqa: E402

__all__ = [
    "HEADER_SIZE",
    "MAX_ATTRIBUTE_LENGTH",
    "MAX_GROUP_DEPTH",
    "MAX_PAYLOAD_WORDS",
    "Attribute",
    "AttributeKind",
    "BadVersion",
    "BfcpMessage",
    "CodecError",
    "CommonHeader",
    "DecodeError",
    "ErrorCode",
    "ErrorCodeValue",
    "FrameReader",
    "GroupedValue",
    "IMPLEMENTATION",
    "InvalidMessage",
    "MalformedAttribute",
    "Primitive",
    "RequestStatus",
    "RequestStatusValue",
    "StreamClosed",
    "Truncated",
    "UnknownMandatoryAttribute",
    "UnknownPrimitive",
    "decode",
    "encode",
    "read_frames",
]
