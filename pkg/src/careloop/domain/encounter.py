"""Encounter state machine: the per-patient workflow at the center of the engine.

Encounters are immutable value objects; every mutation goes through
EncounterLifecycle, which bumps the version by exactly one, saves through the
repository port (optimistic versioning) and publishes exactly one encounter
mutation event. That 1:1 pairing is what makes the event log a full rebuild
source for encounter state.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum

from ..errors import (
    EventTraceMismatch,
    IllegalTransition,
    ScannerUnavailable,
    UnknownEncounter,
)
from .ports import EncounterRepository, EventPublisher, PiiScanner


class Phase(str, Enum):
    INTAKE = "intake"
    PRE_APPOINTMENT = "pre_appointment"
    AWAITING_CONSULT = "awaiting_consult"
    POST_APPOINTMENT = "post_appointment"
    AWAITING_REVIEW = "awaiting_review"
    FINALIZED = "finalized"
    QUARANTINED = "quarantined"


# Legal phase edges. Quarantined -> PostAppointment is the operator requeue path.
LEGAL_EDGES: frozenset[tuple[Phase, Phase]] = frozenset(
    {
        (Phase.INTAKE, Phase.PRE_APPOINTMENT),
        (Phase.PRE_APPOINTMENT, Phase.AWAITING_CONSULT),
        (Phase.AWAITING_CONSULT, Phase.POST_APPOINTMENT),
        (Phase.POST_APPOINTMENT, Phase.AWAITING_REVIEW),
        (Phase.AWAITING_REVIEW, Phase.FINALIZED),
        (Phase.AWAITING_REVIEW, Phase.QUARANTINED),
        (Phase.QUARANTINED, Phase.POST_APPOINTMENT),
    }
)

TERMINAL_PHASES = frozenset({Phase.FINALIZED})


def happy_path() -> list[Phase]:
    """Derive the unique edge path Intake -> Finalized that avoids Quarantined."""
    path = [Phase.INTAKE]
    while path[-1] is not Phase.FINALIZED:
        nxt = [b for (a, b) in LEGAL_EDGES if a is path[-1] and b is not Phase.QUARANTINED]
        if len(nxt) != 1:
            raise IllegalTransition("happy path is not unique", phase=path[-1].value)
        path.append(nxt[0])
    return path


class EntryKind(str, Enum):
    PATIENT_MESSAGE = "patient_message"
    AGENT_QUESTION = "agent_question"
    PATIENT_ANSWER = "patient_answer"
    DRAFT_SUMMARY = "draft_summary"
    FINAL_SUMMARY = "final_summary"


@dataclass(frozen=True)
class ContextEntry:
    kind: EntryKind
    text: str
    occurred_at: datetime
    source_agent: str | None = None  # "agent_id@version" when agent-produced

    def __post_init__(self):
        if not self.text:
            raise ValueError("context entry text must be non-empty")

    def to_dict(self) -> dict:
        from ..serialization import format_ts

        return {
            "kind": self.kind.value,
            "text": self.text,
            "occurred_at": format_ts(self.occurred_at),
            "source_agent": self.source_agent,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ContextEntry":
        from ..serialization import parse_ts

        return cls(
            kind=EntryKind(raw["kind"]),
            text=raw["text"],
            occurred_at=parse_ts(raw["occurred_at"]),
            source_agent=raw.get("source_agent"),
        )


@dataclass(frozen=True)
class Encounter:
    encounter_id: str
    patient_ref: str  # pseudonymous token, never a raw identity
    trace_id: str
    phase: Phase = Phase.INTAKE
    context: tuple[ContextEntry, ...] = ()
    version: int = 1

    def entries(self, kind: EntryKind) -> tuple[ContextEntry, ...]:
        return tuple(e for e in self.context if e.kind is kind)


@dataclass(frozen=True)
class EventRef:
    """Reference to the event that caused a mutation; must share the trace."""

    event_id: str
    trace_id: str


class EncounterLifecycle:
    """All encounter mutations: create, advance_phase, append_context.

    Each call persists exactly one version increment and publishes exactly one
    encounter.* event, so per-trace mutation event count always equals the
    version delta.
    """

    def __init__(self, repo: EncounterRepository, publisher: EventPublisher):
        self._repo = repo
        self._publisher = publisher

    def create(self, encounter_id: str, patient_ref: str, trace_id: str) -> Encounter:
        encounter = Encounter(
            encounter_id=encounter_id, patient_ref=patient_ref, trace_id=trace_id
        )
        self._repo.save(encounter)
        self._publisher.publish(
            "encounter.created",
            trace_id,
            {
                "encounter_id": encounter_id,
                "patient_ref": patient_ref,
                "phase": encounter.phase.value,
                "version": encounter.version,
            },
        )
        return encounter

    def advance_phase(self, encounter: Encounter, target: Phase, cause: EventRef) -> Encounter:
        if cause.trace_id != encounter.trace_id:
            raise EventTraceMismatch(
                "cause event belongs to another trace",
                cause_trace=cause.trace_id,
                trace=encounter.trace_id,
            )
        if (encounter.phase, target) not in LEGAL_EDGES:
            raise IllegalTransition(
                f"no edge {encounter.phase.value} -> {target.value}",
                from_phase=encounter.phase.value,
                to_phase=target.value,
            )
        updated = replace(encounter, phase=target, version=encounter.version + 1)
        self._repo.save(updated)
        self._publisher.publish(
            "encounter.phase_changed",
            encounter.trace_id,
            {
                "encounter_id": encounter.encounter_id,
                "from_phase": encounter.phase.value,
                "to_phase": target.value,
                "version": updated.version,
                "cause_event_id": cause.event_id,
            },
        )
        return updated

    def append_context(self, encounter: Encounter, entry: ContextEntry) -> Encounter:
        if entry.kind is EntryKind.FINAL_SUMMARY and encounter.phase is not Phase.FINALIZED:
            raise IllegalTransition(
                "final summaries may only be attached to finalized encounters",
                phase=encounter.phase.value,
            )
        updated = replace(
            encounter,
            context=encounter.context + (entry,),
            version=encounter.version + 1,
        )
        self._repo.save(updated)
        self._publisher.publish(
            "encounter.context_appended",
            encounter.trace_id,
            {
                "encounter_id": encounter.encounter_id,
                "entry": entry.to_dict(),
                "version": updated.version,
            },
        )
        return updated

    def require(self, encounter_id: str) -> Encounter:
        encounter = self._repo.get(encounter_id)
        if encounter is None:
            raise UnknownEncounter("no such encounter", encounter_id=encounter_id)
        return encounter


def redact_for_model(entry: ContextEntry, scanner: PiiScanner | None) -> ContextEntry:
    """Boundary redaction: returns a redacted copy, the original is untouched."""
    if scanner is None:
        raise ScannerUnavailable("no PII scanner configured at the model boundary")
    return replace(entry, text=scanner.redact(entry.text))
