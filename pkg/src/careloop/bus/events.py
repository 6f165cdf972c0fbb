"""Event, subscription and delivery types plus the payload schema registry."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Callable

from ..errors import InvalidPattern, SchemaViolation
from ..serialization import canonical_json, format_ts, parse_ts


@dataclass
class DomainEvent:
    event_id: str
    trace_id: str
    event_type: str
    occurred_at: datetime
    producer: str
    payload: dict
    schema_version: int = 1
    chain_hash: str = ""  # assigned by the log on append

    def chain_fields(self) -> dict:
        """Everything that feeds the chain digest, i.e. all fields but chain_hash."""
        return {
            "event_id": self.event_id,
            "trace_id": self.trace_id,
            "event_type": self.event_type,
            "occurred_at": format_ts(self.occurred_at),
            "producer": self.producer,
            "payload": self.payload,
            "schema_version": self.schema_version,
        }

    def to_line(self) -> str:
        fields = self.chain_fields()
        fields["chain_hash"] = self.chain_hash
        return canonical_json(fields)

    @classmethod
    def from_line(cls, line: str) -> "DomainEvent":
        import json

        raw = json.loads(line)
        return cls(
            event_id=raw["event_id"],
            trace_id=raw["trace_id"],
            event_type=raw["event_type"],
            occurred_at=parse_ts(raw["occurred_at"]),
            producer=raw["producer"],
            payload=raw["payload"],
            schema_version=raw["schema_version"],
            chain_hash=raw["chain_hash"],
        )


# --- payload schemas -------------------------------------------------------

_TYPE_MAP = {
    "str": str,
    "int": int,
    "float": (int, float),
    "bool": bool,
    "dict": dict,
    "list": list,
}

# event_type -> schema_version -> {field: type name or (type name, "null")}
_SCHEMAS: dict[str, dict[int, dict]] = {}


def register_event_schema(event_type: str, fields: dict, schema_version: int = 1) -> None:
    _SCHEMAS.setdefault(event_type, {})[schema_version] = dict(fields)


def validate_payload(event_type: str, schema_version: int, payload: dict) -> None:
    """Required fields must be present with the registered types; extras are fine."""
    by_version = _SCHEMAS.get(event_type)
    if by_version is None:
        raise SchemaViolation("unregistered event type", event_type=event_type)
    schema = by_version.get(schema_version)
    if schema is None:
        raise SchemaViolation(
            "unregistered schema version",
            event_type=event_type,
            schema_version=schema_version,
        )
    if not isinstance(payload, dict):
        raise SchemaViolation("payload must be a mapping", event_type=event_type)
    for name, spec in schema.items():
        nullable = isinstance(spec, tuple) and "null" in spec
        type_name = spec[0] if isinstance(spec, tuple) else spec
        if name not in payload:
            raise SchemaViolation(
                "missing payload field", event_type=event_type, field=name
            )
        value = payload[name]
        if value is None:
            if nullable:
                continue
            raise SchemaViolation(
                "payload field may not be null", event_type=event_type, field=name
            )
        expected = _TYPE_MAP[type_name]
        if isinstance(value, bool) and expected in (int, (int, float)):
            raise SchemaViolation(
                "payload field has wrong type", event_type=event_type, field=name
            )
        if not isinstance(value, expected):
            raise SchemaViolation(
                "payload field has wrong type", event_type=event_type, field=name
            )


def register_standard_schemas() -> None:
    register_event_schema("encounter.created", {
        "encounter_id": "str", "patient_ref": "str", "phase": "str", "version": "int",
    })
    register_event_schema("encounter.phase_changed", {
        "encounter_id": "str", "from_phase": "str", "to_phase": "str",
        "version": "int", "cause_event_id": "str",
    })
    register_event_schema("encounter.context_appended", {
        "encounter_id": "str", "entry": "dict", "version": "int",
    })
    register_event_schema("message.received", {
        "encounter_id": "str", "channel": "str", "text": "str", "intent": "dict",
    })
    register_event_schema("pre_appointment.completed", {
        "encounter_id": "str", "transcript_artifact": "str", "answers": "dict",
    })
    register_event_schema("consult.completed", {"encounter_id": "str"})
    register_event_schema("post_appointment.completed", {"encounter_id": "str"})
    register_event_schema("summary.ready_for_review", {
        "encounter_id": "str", "artifact_id": "str", "content_hash": "str",
        "agent_id": "str", "agent_version": "int", "model_id": "str",
        "summary": "dict", "text": "str", "input_digest": "str",
        "request": "dict",
    })
    register_event_schema("operator.requeued", {"encounter_id": "str"})
    register_event_schema("agent.failed", {
        "encounter_id": "str", "agent_id": "str", "agent_version": "int",
        "reason": "str", "detail": "str",
    })
    register_event_schema("review.decided", {
        "task_id": "str", "encounter_id": "str", "outcome": "str",
        "reviewer_id": "str", "corrected_text": ("str", "null"),
        "reject_reason": ("str", "null"),
    })
    register_event_schema("notification.requested", {
        "channel_hint": "str", "recipient": "str", "message": "str", "reason": "str",
    })
    register_event_schema("rules.updated", {"version": "int", "audit_seq": "int"})
    register_event_schema("registry.updated", {
        "agent_id": "str", "version": "int", "content_hash": "str",
    })
    register_event_schema("rollout.staged", {
        "agent_id": "str", "candidate_version": "int", "stage": "str",
        "traffic_pct": ("int", "null"),
    })
    register_event_schema("rollout.rolled_back", {
        "agent_id": "str", "candidate_version": "int", "restored_version": "int",
        "reason": "str",
    })
    register_event_schema("golden.appended", {"task_id": "str", "size": "int"})
    register_event_schema("eval.recorded", {
        "agent_id": "str", "version": "int", "score": "float", "examples": "int",
    })


register_standard_schemas()


# --- subscriptions ---------------------------------------------------------

_SEGMENT = r"[a-z0-9_]+"
_PATTERN_RE = re.compile(rf"^{_SEGMENT}(\.{_SEGMENT})*(\.\*)?$")


def validate_pattern(pattern: str) -> None:
    if not _PATTERN_RE.match(pattern or ""):
        raise InvalidPattern("bad subscription pattern", pattern=pattern)


def match_pattern(pattern: str, event_type: str) -> bool:
    """Exact match, or a single trailing-segment wildcard: "review.*" matches
    "review.decided" but not "review.decided.extra"."""
    if pattern == event_type:
        return True
    if pattern.endswith(".*"):
        prefix = pattern[:-2]
        if not event_type.startswith(prefix + "."):
            return False
        tail = event_type[len(prefix) + 1:]
        return bool(tail) and "." not in tail
    return False


@dataclass
class Subscription:
    subscriber_id: str
    pattern: str
    handler: Callable[[DomainEvent], None]
    max_retries: int = 3
    dead_letter: bool = True
    dedupe: bool = True  # skip handler for an event_id this subscriber already processed

    def __post_init__(self):
        validate_pattern(self.pattern)


class DeliveryOutcome(str, Enum):
    DELIVERED = "delivered"
    FAILED = "failed"  # a retried attempt; non-terminal
    DEAD_LETTERED = "dead_lettered"
    DEDUPLICATED = "deduplicated"


@dataclass
class DeliveryRecord:
    event_id: str
    subscriber_id: str
    attempt: int
    outcome: DeliveryOutcome
    at: datetime
    error: str | None = None
