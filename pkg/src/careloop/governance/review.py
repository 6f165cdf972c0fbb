"""Review task lifecycle and the decision orchestrator.

Tasks leave Pending at most once (first writer wins). Each decision publishes
review.decided before any finalizing mutation, appends at least two audit
records sharing the task's trace, and: Approve locks the draft as the final
output, Correct substitutes the reviewer's text and grows the golden set,
Reject quarantines the encounter and alerts operators.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime
from decimal import Decimal, ROUND_HALF_UP
from enum import Enum

from ..domain import ContextEntry, EntryKind, EventRef, Phase
from ..errors import (
    CorrectedTextUnchanged,
    IllegalTransition,
    MissingCorrectedText,
    MissingRejectReason,
    NotFound,
    UnknownEncounter,
)
from ..runtime import Clock, IdGenerator
from ..serialization import format_ts, parse_ts
from .audit import AuditAction, AuditLog

VERIFICATION_MESSAGE = (
    "Our medical team has verified that the answer given to your question is correct!"
)


class ReviewStatus(str, Enum):
    PENDING = "pending"
    APPROVED = "approved"
    CORRECTED = "corrected"
    REJECTED = "rejected"
    EXPIRED = "expired"


class DecisionOutcome(str, Enum):
    APPROVE = "approve"
    CORRECT = "correct"
    REJECT = "reject"


_OUTCOME_STATUS = {
    DecisionOutcome.APPROVE: ReviewStatus.APPROVED,
    DecisionOutcome.CORRECT: ReviewStatus.CORRECTED,
    DecisionOutcome.REJECT: ReviewStatus.REJECTED,
}

_STATUS_ACTION = {
    ReviewStatus.APPROVED: AuditAction.APPROVED,
    ReviewStatus.CORRECTED: AuditAction.CORRECTED,
}


@dataclass(frozen=True)
class Provenance:
    agent_id: str
    manifest_version: int
    model_id: str

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "manifest_version": self.manifest_version,
            "model_id": self.model_id,
        }

    def label(self) -> str:
        return f"{self.agent_id}@{self.manifest_version}"


@dataclass(frozen=True)
class ReviewTask:
    task_id: str
    trace_id: str
    encounter_id: str
    subject_text: str
    content_hash: str
    artifact_id: str
    input_digest: str
    provenance: Provenance
    summary_fields: dict
    eval_request: dict
    status: ReviewStatus
    created_at: datetime
    decided_at: datetime | None = None
    reviewer_id: str | None = None
    corrected_text: str | None = None
    reject_reason: str | None = None


@dataclass(frozen=True)
class ReviewDecision:
    task_id: str
    outcome: DecisionOutcome
    reviewer_id: str
    corrected_text: str | None = None
    reject_reason: str | None = None


@dataclass(frozen=True)
class GoldenExample:
    """One reviewer-corrected example. eval_request keeps the redacted model
    inputs so offline evaluation can regenerate a candidate's answer."""

    input_digest: str
    ai_output: dict
    corrected_output: dict
    reviewer_id: str
    source_task_id: str
    created_at: datetime
    eval_request: dict

    def to_dict(self) -> dict:
        return {
            "input_digest": self.input_digest,
            "ai_output": self.ai_output,
            "corrected_output": self.corrected_output,
            "reviewer_id": self.reviewer_id,
            "source_task_id": self.source_task_id,
            "created_at": format_ts(self.created_at),
            "eval_request": self.eval_request,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "GoldenExample":
        return cls(
            input_digest=raw["input_digest"],
            ai_output=raw["ai_output"],
            corrected_output=raw["corrected_output"],
            reviewer_id=raw["reviewer_id"],
            source_task_id=raw["source_task_id"],
            created_at=parse_ts(raw["created_at"]),
            eval_request=raw.get("eval_request", {}),
        )


def _pct(part: int, whole: int) -> int:
    if whole == 0:
        return 0
    return int(
        (Decimal(part * 100) / Decimal(whole)).quantize(Decimal(1), rounding=ROUND_HALF_UP)
    )


class ReviewOrchestrator:
    def __init__(self, tasks, lifecycle, repo, audit: AuditLog, golden,
                 publisher, clock: Clock, idgen: IdGenerator, trace_lock):
        self._tasks = tasks
        self._lifecycle = lifecycle
        self._repo = repo
        self._audit = audit
        self._golden = golden
        self._publisher = publisher
        self._clock = clock
        self._idgen = idgen
        self._trace_lock = trace_lock

    # --- task creation --------------------------------------------------------

    def on_summary_ready(self, event) -> ReviewTask:
        payload = event.payload
        with self._trace_lock(event.trace_id):
            encounter = self._repo.get(payload["encounter_id"])
            if encounter is None:
                self._audit.append(
                    event.trace_id, "system", AuditAction.EVENT_REJECTED,
                    {"event_id": event.event_id, "reason": "unknown_encounter"},
                )
                raise UnknownEncounter(
                    "summary for unknown encounter", encounter_id=payload["encounter_id"]
                )
            if encounter.phase is not Phase.POST_APPOINTMENT:
                self._audit.append(
                    event.trace_id, "system", AuditAction.EVENT_REJECTED,
                    {
                        "event_id": event.event_id,
                        "reason": "invalid_phase",
                        "phase": encounter.phase.value,
                    },
                )
                raise IllegalTransition(
                    "summary arrived out of order", phase=encounter.phase.value
                )
            self._lifecycle.advance_phase(
                encounter, Phase.AWAITING_REVIEW, EventRef(event.event_id, event.trace_id)
            )
            task = ReviewTask(
                task_id=self._idgen.uuid("task-"),
                trace_id=event.trace_id,
                encounter_id=payload["encounter_id"],
                subject_text=payload["text"],
                content_hash=payload["content_hash"],
                artifact_id=payload["artifact_id"],
                input_digest=payload["input_digest"],
                provenance=Provenance(
                    payload["agent_id"], payload["agent_version"], payload["model_id"]
                ),
                summary_fields=dict(payload["summary"]),
                eval_request=dict(payload["request"]),
                status=ReviewStatus.PENDING,
                created_at=self._clock.now(),
            )
            self._tasks.put(task)
            self._audit.append(
                event.trace_id, "system", AuditAction.TASK_CREATED,
                {
                    "task_id": task.task_id,
                    "encounter_id": task.encounter_id,
                    "artifact_id": task.artifact_id,
                    "content_hash": task.content_hash,
                    "input_digest": task.input_digest,
                    "provenance": task.provenance.to_dict(),
                    "created_at": format_ts(task.created_at),
                },
            )
            return task

    # --- decisions -------------------------------------------------------------

    def decide(self, decision: ReviewDecision) -> dict:
        task = self._tasks.get(decision.task_id)
        if task is None:
            raise NotFound("no such review task", task_id=decision.task_id)
        corrected = (decision.corrected_text or "").strip() or None
        reason = (decision.reject_reason or "").strip() or None
        if decision.outcome is DecisionOutcome.CORRECT:
            if corrected is None:
                raise MissingCorrectedText("a correction needs the corrected text")
            if corrected == task.subject_text:
                raise CorrectedTextUnchanged(
                    "corrected text must differ from the draft", task_id=task.task_id
                )
        if decision.outcome is DecisionOutcome.REJECT and reason is None:
            raise MissingRejectReason("a rejection needs a reason")

        with self._trace_lock(task.trace_id):
            encounter = self._repo.get(task.encounter_id)
            if encounter is None:
                raise UnknownEncounter("task references a missing encounter")
            decided = replace(
                task,
                status=_OUTCOME_STATUS[decision.outcome],
                decided_at=self._clock.now(),
                reviewer_id=decision.reviewer_id,
                corrected_text=corrected if decision.outcome is DecisionOutcome.CORRECT else None,
                reject_reason=reason if decision.outcome is DecisionOutcome.REJECT else None,
            )
            self._tasks.transition_from_pending(task.task_id, decided)
            event_id = self._publisher.publish(
                "review.decided",
                task.trace_id,
                {
                    "task_id": task.task_id,
                    "encounter_id": task.encounter_id,
                    "outcome": decision.outcome.value,
                    "reviewer_id": decision.reviewer_id,
                    "corrected_text": decided.corrected_text,
                    "reject_reason": decided.reject_reason,
                    "decided_at": format_ts(decided.decided_at),
                },
            )
            cause = EventRef(event_id, task.trace_id)
            if decision.outcome is DecisionOutcome.REJECT:
                effects = self._reject(encounter, decided, cause)
            else:
                effects = self._finalize(encounter, decided, cause)
        effects["task_id"] = task.task_id
        effects["outcome"] = decision.outcome.value
        effects["status"] = decided.status.value
        return effects

    def _finalize(self, encounter, task: ReviewTask, cause: EventRef) -> dict:
        final_text = (
            task.corrected_text if task.status is ReviewStatus.CORRECTED else task.subject_text
        )
        encounter = self._lifecycle.advance_phase(encounter, Phase.FINALIZED, cause)
        encounter = self._lifecycle.append_context(
            encounter,
            ContextEntry(
                kind=EntryKind.FINAL_SUMMARY,
                text=final_text,
                occurred_at=self._clock.now(),
                source_agent=task.provenance.label(),
            ),
        )
        seqs = []
        decision_record = self._audit.append(
            task.trace_id, task.reviewer_id, _STATUS_ACTION[task.status],
            {"task_id": task.task_id, "encounter_id": task.encounter_id},
        )
        seqs.append(decision_record.seq)
        if task.status is ReviewStatus.APPROVED:
            lock_record = self._audit.append(
                task.trace_id, task.reviewer_id, AuditAction.VERSION_LOCKED,
                {
                    "task_id": task.task_id,
                    "content_hash": task.content_hash,
                    "artifact_id": task.artifact_id,
                    "provenance": task.provenance.to_dict(),
                },
            )
            seqs.append(lock_record.seq)
        else:
            example = GoldenExample(
                input_digest=task.input_digest,
                ai_output={"text": task.subject_text, "fields": task.summary_fields},
                corrected_output={"text": final_text},
                reviewer_id=task.reviewer_id,
                source_task_id=task.task_id,
                created_at=self._clock.now(),
                eval_request=task.eval_request,
            )
            self._golden.append(example)
            golden_record = self._audit.append(
                task.trace_id, task.reviewer_id, AuditAction.GOLDEN_SET_APPENDED,
                {"task_id": task.task_id, "size": self._golden.size()},
            )
            seqs.append(golden_record.seq)
            self._publisher.publish(
                "golden.appended", task.trace_id,
                {"task_id": task.task_id, "size": self._golden.size()},
            )
        for reason, message in (("final_answer", final_text), ("verification", VERIFICATION_MESSAGE)):
            self._publisher.publish(
                "notification.requested", task.trace_id,
                {
                    "channel_hint": "patient",
                    "recipient": encounter.patient_ref,
                    "message": message,
                    "reason": reason,
                },
            )
        return {
            "audit_seqs": seqs,
            "final_text": final_text,
            "encounter_phase": Phase.FINALIZED.value,
        }

    def _reject(self, encounter, task: ReviewTask, cause: EventRef) -> dict:
        encounter = self._lifecycle.advance_phase(encounter, Phase.QUARANTINED, cause)
        seqs = [
            self._audit.append(
                task.trace_id, task.reviewer_id, AuditAction.REJECTED,
                {"task_id": task.task_id, "reason": task.reject_reason},
            ).seq,
            self._audit.append(
                task.trace_id, task.reviewer_id, AuditAction.ROLLED_BACK,
                {"task_id": task.task_id, "encounter_id": task.encounter_id},
            ).seq,
        ]
        self._publisher.publish(
            "notification.requested", task.trace_id,
            {
                "channel_hint": "operators",
                "recipient": "operations",
                "message": f"draft rejected: {task.reject_reason}",
                "reason": "alert",
            },
        )
        return {
            "audit_seqs": seqs,
            "final_text": None,
            "encounter_phase": Phase.QUARANTINED.value,
        }

    # --- expiry and stats -------------------------------------------------------

    def expire_stale(self, older_than_seconds: float) -> int:
        now = self._clock.now()
        expired = 0
        for task in self._tasks.by_status(ReviewStatus.PENDING):
            age = (now - task.created_at).total_seconds()
            if age > older_than_seconds:
                updated = replace(task, status=ReviewStatus.EXPIRED)
                self._tasks.transition_from_pending(task.task_id, updated)
                self._audit.append(
                    task.trace_id, "system", AuditAction.EXPIRED,
                    {"task_id": task.task_id, "age_seconds": int(age)},
                )
                expired += 1
        return expired

    def stats(self) -> dict:
        tasks = self._tasks.all()
        approved = sum(1 for t in tasks if t.status is ReviewStatus.APPROVED)
        corrected = sum(1 for t in tasks if t.status is ReviewStatus.CORRECTED)
        rejected = sum(1 for t in tasks if t.status is ReviewStatus.REJECTED)
        expired = sum(1 for t in tasks if t.status is ReviewStatus.EXPIRED)
        pending = sum(1 for t in tasks if t.status is ReviewStatus.PENDING)
        actioned = approved + corrected + rejected
        return {
            "total_tasks": len(tasks),
            "actioned": actioned,
            "pending": pending,
            "expired": expired,
            "approved": approved,
            "corrected": corrected,
            "rejected": rejected,
            "approve_rate_pct": _pct(approved, actioned),
            "correct_rate_pct": _pct(corrected, actioned),
            "reject_rate_pct": _pct(rejected, actioned),
        }
