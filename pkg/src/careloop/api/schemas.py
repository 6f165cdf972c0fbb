"""Request and response bodies for the HTTP surface."""

from __future__ import annotations

from pydantic import BaseModel, Field


class MessageIn(BaseModel):
    text: str
    patient_identity: str | None = None
    channel: str = "text"
    encounter_id: str | None = None


class IntentOut(BaseModel):
    label: str
    confidence: float


class MessageAck(BaseModel):
    accepted: bool
    encounter_id: str
    trace_id: str
    event_id: str
    intent: IntentOut


class ConsultNotesIn(BaseModel):
    notes: str


class EncounterOut(BaseModel):
    encounter_id: str
    patient_ref: str
    trace_id: str
    phase: str
    version: int
    context: list[dict]


class ProvenanceOut(BaseModel):
    agent_id: str
    manifest_version: int
    model_id: str


class TaskOut(BaseModel):
    task_id: str
    trace_id: str
    encounter_id: str
    status: str
    subject_text: str
    summary: dict
    content_hash: str
    artifact_id: str
    input_digest: str
    provenance: ProvenanceOut
    created_at: str
    decided_at: str | None = None
    reviewer_id: str | None = None
    corrected_text: str | None = None
    reject_reason: str | None = None


class DecisionIn(BaseModel):
    outcome: str = Field(description="approve, correct or reject")
    reviewer_id: str
    corrected_text: str | None = None
    reject_reason: str | None = None


class DecisionOut(BaseModel):
    task_id: str
    outcome: str
    status: str
    encounter_phase: str
    final_text: str | None = None
    audit_seqs: list[int]


class ExpireIn(BaseModel):
    older_than_days: float | None = None


class ExpireOut(BaseModel):
    expired: int


class StatsOut(BaseModel):
    total_tasks: int
    actioned: int
    pending: int
    expired: int
    approved: int
    corrected: int
    rejected: int
    approve_rate_pct: int
    correct_rate_pct: int
    reject_rate_pct: int
    golden_size: int
    audit_records: int


class VerifyOut(BaseModel):
    ok: bool
    first_bad_seq: int | None = None
    records: int


class FieldSpecIn(BaseModel):
    name: str
    type: str
    required: bool = True


class ManifestIn(BaseModel):
    agent_id: str
    model_id: str
    prompt_template: str
    policies: list[str] = Field(default_factory=list)
    output_schema: list[FieldSpecIn]
    expected_latest: int | None = None


class ManifestAck(BaseModel):
    agent_id: str
    version: int
    created: bool
    content_hash: str
    checks: dict


class StageIn(BaseModel):
    version: int


class PromoteIn(BaseModel):
    to_stage: str | None = None


class RollbackIn(BaseModel):
    reason: str = "manual"


class RequeueOut(BaseModel):
    encounter_id: str
    event_id: str


class ErrorOut(BaseModel):
    code: str
    message: str
    detail: dict = Field(default_factory=dict)
