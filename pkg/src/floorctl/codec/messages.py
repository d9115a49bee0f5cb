"""Builders and views for the concrete messages this system exchanges.

Status notifications use the grouped layout: a FLOOR-REQUEST-INFORMATION
attribute keyed by the floor-request id, containing an OVERALL-REQUEST-STATUS
group (request state + queue position), a FLOOR-REQUEST-STATUS group (floor
id) and, where useful, the owner id and display name.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    Attribute,
    AttributeKind,
    BfcpMessage,
    ErrorCodeValue,
    GroupedValue,
    Primitive,
    RequestStatus,
    RequestStatusValue,
)

# Wire priority is 0..7 (higher is more urgent). Plain requests travel as 2,
# elevated ones as 4; anything 3+ is treated as elevated on receipt.
WIRE_PRIORITY_NORMAL = 2
WIRE_PRIORITY_ELEVATED = 4


def hello(conference_id: int, transaction_id: int, user_id: int, info: str | None = None) -> BfcpMessage:
    attrs = []
    if info is not None:
        attrs.append(Attribute(AttributeKind.PARTICIPANT_PROVIDED_INFO, info))
    return BfcpMessage.build(Primitive.HELLO, conference_id, transaction_id, user_id, attrs)


def hello_ack(conference_id: int, transaction_id: int, user_id: int) -> BfcpMessage:
    return BfcpMessage.build(Primitive.HELLO_ACK, conference_id, transaction_id, user_id)


def floor_request(
    conference_id: int,
    transaction_id: int,
    user_id: int,
    floor_id: int,
    priority: int | None = None,
    info: str | None = None,
) -> BfcpMessage:
    attrs = [Attribute(AttributeKind.FLOOR_ID, floor_id)]
    if priority is not None:
        attrs.append(Attribute(AttributeKind.PRIORITY, priority))
    if info is not None:
        attrs.append(Attribute(AttributeKind.PARTICIPANT_PROVIDED_INFO, info))
    return BfcpMessage.build(
        Primitive.FLOOR_REQUEST, conference_id, transaction_id, user_id, attrs
    )


def floor_release(
    conference_id: int, transaction_id: int, user_id: int, floor_request_id: int
) -> BfcpMessage:
    return BfcpMessage.build(
        Primitive.FLOOR_RELEASE,
        conference_id,
        transaction_id,
        user_id,
        [Attribute(AttributeKind.FLOOR_REQUEST_ID, floor_request_id)],
    )


def _request_information(
    floor_request_id: int,
    floor_id: int,
    status: RequestStatus,
    queue_position: int,
    owner_id: int | None = None,
    display_name: str | None = None,
) -> Attribute:
    subattrs = [
        Attribute(
            AttributeKind.OVERALL_REQUEST_STATUS,
            GroupedValue(
                floor_request_id,
                (
                    Attribute(
                        AttributeKind.REQUEST_STATUS,
                        RequestStatusValue(status, min(queue_position, 255)),
                    ),
                ),
            ),
        ),
        Attribute(AttributeKind.FLOOR_REQUEST_STATUS, GroupedValue(floor_id)),
    ]
    if owner_id is not None:
        subattrs.append(
            Attribute(AttributeKind.BENEFICIARY_INFORMATION, GroupedValue(owner_id))
        )
    if display_name:
        subattrs.append(Attribute(AttributeKind.PARTICIPANT_PROVIDED_INFO, display_name))
    return Attribute(
        AttributeKind.FLOOR_REQUEST_INFORMATION,
        GroupedValue(floor_request_id, tuple(subattrs)),
    )


def floor_request_status(
    conference_id: int,
    transaction_id: int,
    user_id: int,
    floor_request_id: int,
    floor_id: int,
    status: RequestStatus,
    queue_position: int = 0,
    display_name: str | None = None,
) -> BfcpMessage:
    return BfcpMessage.build(
        Primitive.FLOOR_REQUEST_STATUS,
        conference_id,
        transaction_id,
        user_id,
        [
            _request_information(
                floor_request_id, floor_id, status, queue_position, display_name=display_name
            )
        ],
    )


def floor_status(
    conference_id: int,
    transaction_id: int,
    user_id: int,
    floor_id: int,
    entries: list[tuple[int, int, RequestStatus, int, str]],
) -> BfcpMessage:
    """Floor-wide status: one (request, owner, state, position, name) per entry."""
    attrs = [Attribute(AttributeKind.FLOOR_ID, floor_id)]
    for floor_request_id, owner_id, status, position, name in entries:
        attrs.append(
            _request_information(
                floor_request_id, floor_id, status, position, owner_id=owner_id,
                display_name=name,
            )
        )
    return BfcpMessage.build(
        Primitive.FLOOR_STATUS, conference_id, transaction_id, user_id, attrs
    )


def chair_action(
    conference_id: int,
    transaction_id: int,
    user_id: int,
    floor_request_id: int,
    target: RequestStatus,
) -> BfcpMessage:
    return BfcpMessage.build(
        Primitive.CHAIR_ACTION,
        conference_id,
        transaction_id,
        user_id,
        [
            Attribute(AttributeKind.FLOOR_REQUEST_ID, floor_request_id),
            Attribute(AttributeKind.REQUEST_STATUS, RequestStatusValue(target, 0)),
        ],
    )


def chair_action_ack(conference_id: int, transaction_id: int, user_id: int) -> BfcpMessage:
    return BfcpMessage.build(
        Primitive.CHAIR_ACTION_ACK, conference_id, transaction_id, user_id
    )


def error(
    conference_id: int,
    transaction_id: int,
    user_id: int,
    code: int,
    info: str | None = None,
) -> BfcpMessage:
    attrs = [Attribute(AttributeKind.ERROR_CODE, ErrorCodeValue(code))]
    if info is not None:
        attrs.append(Attribute(AttributeKind.PARTICIPANT_PROVIDED_INFO, info))
    return BfcpMessage.build(Primitive.ERROR, conference_id, transaction_id, user_id, attrs)


@dataclass(frozen=True)
class StatusView:
    """Flattened view of one request inside a status notification."""

    floor_request_id: int
    status: RequestStatus
    queue_position: int
    floor_id: int | None = None
    owner_id: int | None = None
    display_name: str | None = None


def _view_from_information(attr: Attribute) -> StatusView | None:
    group = attr.value
    if not isinstance(group, GroupedValue):
        return None
    status = None
    position = 0
    floor_id = None
    owner_id = None
    display_name = None
    for sub in group.attributes:
        if sub.kind == AttributeKind.OVERALL_REQUEST_STATUS and isinstance(
            sub.value, GroupedValue
        ):
            for inner in sub.value.attributes:
                if inner.kind == AttributeKind.REQUEST_STATUS and isinstance(
                    inner.value, RequestStatusValue
                ):
                    status = inner.value.status
                    position = inner.value.queue_position
        elif sub.kind == AttributeKind.FLOOR_REQUEST_STATUS and isinstance(
            sub.value, GroupedValue
        ):
            floor_id = sub.value.header
        elif sub.kind == AttributeKind.BENEFICIARY_INFORMATION and isinstance(
            sub.value, GroupedValue
        ):
            owner_id = sub.value.header
        elif sub.kind == AttributeKind.PARTICIPANT_PROVIDED_INFO:
            display_name = sub.value
    if status is None:
        return None
    return StatusView(
        floor_request_id=group.header,
        status=status,
        queue_position=position,
        floor_id=floor_id,
        owner_id=owner_id,
        display_name=display_name,
    )


def status_views(msg: BfcpMessage) -> list[StatusView]:
    """All request views carried by a FloorRequestStatus or FloorStatus."""
    views = []
    for attr in msg.attributes:
        if attr.kind == AttributeKind.FLOOR_REQUEST_INFORMATION:
            view = _view_from_information(attr)
            if view is not None:
                views.append(view)
    return views


def chair_action_target(msg: BfcpMessage) -> tuple[int, RequestStatus] | None:
    """Extract (floor_request_id, target status) from a ChairAction.

    Accepts both the flat layout (FLOOR-REQUEST-ID + REQUEST-STATUS) and the
    grouped FLOOR-REQUEST-INFORMATION layout.
    """
    request_id = None
    target = None
    for attr in msg.attributes:
        if attr.kind == AttributeKind.FLOOR_REQUEST_ID:
            request_id = attr.value
        elif attr.kind == AttributeKind.REQUEST_STATUS and isinstance(
            attr.value, RequestStatusValue
        ):
            target = attr.value.status
    if request_id is not None and target is not None:
        return request_id, target
    for attr in msg.attributes:
        if attr.kind == AttributeKind.FLOOR_REQUEST_INFORMATION:
            view = _view_from_information(attr)
            if view is not None:
                return view.floor_request_id, view.status
    return None
