"""In-process event bus with a durable, hash-chained, append-only log."""

from .events import (
    DeliveryOutcome,
    DeliveryRecord,
    DomainEvent,
    Subscription,
    match_pattern,
    register_event_schema,
    validate_payload,
    validate_pattern,
)
from .core import EventBus

__all__ = [
    "DeliveryOutcome",
    "DeliveryRecord",
    "DomainEvent",
    "EventBus",
    "Subscription",
    "match_pattern",
    "register_event_schema",
    "validate_pattern",
    "validate_payload",
]
