"""Pre-appointment elicitation agent.

Stateless between invocations: progress is derived from the encounter context
(count of patient_answer entries = questionnaire position). Each inbound
message either starts the questionnaire, records a valid answer, or re-asks
the current question with an attempt counter.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..domain import ContextEntry, Encounter, EncounterLifecycle, EntryKind, EventRef, Phase
from ..errors import IllegalTransition, InvalidAnswer
from ..runtime import Clock
from .questionnaire import Questionnaire

AGENT_LABEL = "pre_agent@1"


@dataclass(frozen=True)
class StepResult:
    kind: str  # "asked" or "completed"
    encounter: Encounter
    field_id: str | None = None
    prompt: str | None = None
    attempt: int = 1
    transcript_artifact: str | None = None
    answers: dict | None = None


class PreAppointmentAgent:
    def __init__(self, lifecycle: EncounterLifecycle, questionnaire: Questionnaire,
                 artifacts, publisher, clock: Clock):
        self._lifecycle = lifecycle
        self._questionnaire = questionnaire
        self._artifacts = artifacts
        self._publisher = publisher
        self._clock = clock

    def step(self, encounter: Encounter, text: str, cause: EventRef) -> StepResult:
        if encounter.phase is Phase.INTAKE:
            return self._start(encounter, text, cause)
        if encounter.phase is Phase.PRE_APPOINTMENT:
            return self._answer(encounter, text, cause)
        raise IllegalTransition(
            "pre-agent only runs during intake or pre-appointment",
            phase=encounter.phase.value,
        )

    def _start(self, encounter: Encounter, text: str, cause: EventRef) -> StepResult:
        encounter = self._lifecycle.advance_phase(encounter, Phase.PRE_APPOINTMENT, cause)
        encounter = self._append(encounter, EntryKind.PATIENT_MESSAGE, text, source=None)
        first = self._questionnaire.field_at(0)
        encounter = self._ask(encounter, first.prompt)
        self._notify_question(encounter, first.prompt, attempt=1)
        return StepResult("asked", encounter, field_id=first.field_id, prompt=first.prompt)

    def _answer(self, encounter: Encounter, text: str, cause: EventRef) -> StepResult:
        answered = len(encounter.entries(EntryKind.PATIENT_ANSWER))
        spec = self._questionnaire.field_at(answered)
        if spec is None:  # complete already; treat as a plain message
            encounter = self._append(encounter, EntryKind.PATIENT_MESSAGE, text, source=None)
            return StepResult("asked", encounter)
        try:
            spec.validate(text)
        except InvalidAnswer as exc:
            encounter = self._append(encounter, EntryKind.PATIENT_MESSAGE, text, source=None)
            attempt = self._attempts(encounter) + 1
            encounter = self._ask(encounter, spec.prompt)
            self._notify_question(encounter, spec.prompt, attempt=attempt, note=exc.message)
            raise InvalidAnswer(
                exc.message, field_id=spec.field_id, attempt=attempt,
                encounter_id=encounter.encounter_id,
            )
        encounter = self._append(encounter, EntryKind.PATIENT_ANSWER, text, source=None)
        answered += 1
        if self._questionnaire.is_complete(answered):
            return self._complete(encounter)
        nxt = self._questionnaire.field_at(answered)
        encounter = self._ask(encounter, nxt.prompt)
        self._notify_question(encounter, nxt.prompt, attempt=1)
        return StepResult("asked", encounter, field_id=nxt.field_id, prompt=nxt.prompt)

    def _complete(self, encounter: Encounter) -> StepResult:
        answers = self.answers(encounter)
        transcript = self._render_transcript(encounter)
        ref = self._artifacts.put(transcript.encode("utf-8"), kind="transcript")
        event_id = self._publisher.publish(
            "pre_appointment.completed",
            encounter.trace_id,
            {
                "encounter_id": encounter.encounter_id,
                "transcript_artifact": ref.artifact_id,
                "answers": answers,
            },
        )
        encounter = self._lifecycle.advance_phase(
            encounter, Phase.AWAITING_CONSULT, EventRef(event_id, encounter.trace_id)
        )
        return StepResult(
            "completed", encounter, transcript_artifact=ref.artifact_id, answers=answers
        )

    # --- helpers -------------------------------------------------------------

    def answers(self, encounter: Encounter) -> dict:
        entries = encounter.entries(EntryKind.PATIENT_ANSWER)
        return {
            spec.field_id: entry.text
            for spec, entry in zip(self._questionnaire.fields, entries)
        }

    def _attempts(self, encounter: Encounter) -> int:
        """How many times the current question has been asked so far."""
        count = 0
        for entry in reversed(encounter.context):
            if entry.kind is EntryKind.PATIENT_ANSWER:
                break
            if entry.kind is EntryKind.AGENT_QUESTION:
                count += 1
        return count

    def _append(self, encounter, kind, text, source) -> Encounter:
        entry = ContextEntry(kind=kind, text=text, occurred_at=self._clock.now(),
                             source_agent=source)
        return self._lifecycle.append_context(encounter, entry)

    def _ask(self, encounter: Encounter, prompt: str) -> Encounter:
        return self._append(encounter, EntryKind.AGENT_QUESTION, prompt, source=AGENT_LABEL)

    def _notify_question(self, encounter, prompt, attempt, note=None) -> None:
        message = prompt if attempt == 1 else f"(attempt {attempt}) {note or ''} {prompt}".strip()
        self._publisher.publish(
            "notification.requested",
            encounter.trace_id,
            {
                "channel_hint": "patient",
                "recipient": encounter.patient_ref,
                "message": message,
                "reason": "question" if attempt == 1 else "reask",
            },
        )

    def _render_transcript(self, encounter: Encounter) -> str:
        lines = [f"encounter: {encounter.encounter_id}"]
        for entry in encounter.context:
            lines.append(f"{entry.kind.value}: {entry.text}")
        return "\n".join(lines) + "\n"
