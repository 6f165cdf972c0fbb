"""HTTP surface over the application facade.

Message ingestion acknowledges immediately with 202; all downstream agent work
happens on the bus. Domain errors map onto stable {code, message, detail}
bodies so clients can branch on the code instead of parsing prose.
"""

from __future__ import annotations

import time

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..application import Application
from ..errors import (
    ChecksFailed,
    ConsistencyViolation,
    CorrectedTextUnchanged,
    DuplicateTaskFeedback,
    EmptyGoldenSet,
    EmptyWindow,
    EvalGateFailed,
    IllegalStageJump,
    IllegalTransition,
    InsufficientBaseline,
    InvalidAnswer,
    LogUnavailable,
    MissingCorrectedText,
    MissingRejectReason,
    NotFound,
    ProviderError,
    ScannerUnavailable,
    SchemaViolation,
    StaleVersion,
    StoreUnavailable,
    TaskNotPending,
    UnknownAuditRef,
    UnknownEncounter,
    ValidationFailed,
    VersionConflict,
    WorkflowError,
)
from . import schemas

_STATUS_BY_ERROR = (
    ((NotFound, UnknownEncounter, UnknownAuditRef), 404),
    ((StaleVersion, TaskNotPending, VersionConflict, IllegalTransition,
      IllegalStageJump, DuplicateTaskFeedback, EvalGateFailed, EmptyGoldenSet), 409),
    ((ValidationFailed, MissingCorrectedText, MissingRejectReason,
      CorrectedTextUnchanged, InvalidAnswer, SchemaViolation, ChecksFailed,
      ConsistencyViolation, InsufficientBaseline, EmptyWindow), 422),
    ((LogUnavailable, StoreUnavailable, ScannerUnavailable, ProviderError), 503),
)


def _status_for(exc: WorkflowError) -> int:
    for types, status in _STATUS_BY_ERROR:
        if isinstance(exc, types):
            return status
    return 400


def create_app(application: Application) -> FastAPI:
    api = FastAPI(title="careloop", version="0.1.0")
    api.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    api.state.application = application

    @api.exception_handler(WorkflowError)
    async def workflow_error_handler(_: Request, exc: WorkflowError):
        body = {"code": exc.code, "message": exc.message, "detail": exc.detail}
        if isinstance(exc, ChecksFailed) and exc.report is not None:
            body["detail"] = dict(body["detail"], report=exc.report.to_dict())
        return JSONResponse(status_code=_status_for(exc), content=body)

    @api.exception_handler(RequestValidationError)
    async def request_validation_handler(_: Request, exc: RequestValidationError):
        errors = [
            {"type": err.get("type"), "loc": list(err.get("loc", ())),
             "msg": err.get("msg")}
            for err in exc.errors()
        ]
        return JSONResponse(
            status_code=400,
            content={
                "code": "bad_request",
                "message": "request body failed validation",
                "detail": {"errors": errors},
            },
        )

    @api.middleware("http")
    async def record_latency(request: Request, call_next):
        started = time.perf_counter()
        response = await call_next(request)
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        application.metrics.record("api.request_ms", elapsed_ms)
        application.metrics.record(
            f"api.{request.method.lower()}.{request.url.path}", elapsed_ms
        )
        return response

    @api.get("/v1/healthz")
    def healthz():
        return {"status": "ok"}

    # --- intake ---------------------------------------------------------------

    @api.post("/v1/messages", response_model=schemas.MessageAck, status_code=202)
    def post_message(body: schemas.MessageIn):
        return application.ingest_message(
            body.patient_identity, body.text,
            channel=body.channel, encounter_id=body.encounter_id,
        )

    @api.get("/v1/encounters/{encounter_id}", response_model=schemas.EncounterOut)
    def get_encounter(encounter_id: str):
        return application.get_encounter(encounter_id)

    @api.post("/v1/encounters/{encounter_id}/consult-notes",
              response_model=schemas.MessageAck, status_code=202)
    def post_consult_notes(encounter_id: str, body: schemas.ConsultNotesIn):
        return application.attach_consult_notes(encounter_id, body.notes)

    @api.post("/v1/encounters/{encounter_id}/requeue",
              response_model=schemas.RequeueOut, status_code=202)
    def post_requeue(encounter_id: str):
        return application.requeue_encounter(encounter_id)

    # --- review ----------------------------------------------------------------

    @api.get("/v1/review/tasks", response_model=list[schemas.TaskOut])
    def list_tasks(status: str | None = None):
        return application.list_tasks(status)

    @api.get("/v1/review/tasks/{task_id}", response_model=schemas.TaskOut)
    def get_task(task_id: str):
        return application.get_task(task_id)

    @api.post("/v1/review/tasks/{task_id}/decision", response_model=schemas.DecisionOut)
    def post_decision(task_id: str, body: schemas.DecisionIn):
        return application.decide(
            task_id, body.outcome, body.reviewer_id,
            corrected_text=body.corrected_text, reject_reason=body.reject_reason,
        )

    @api.post("/v1/review/expire", response_model=schemas.ExpireOut)
    def post_expire(body: schemas.ExpireIn):
        return {"expired": application.expire_stale(body.older_than_days)}

    # --- audit -----------------------------------------------------------------

    @api.get("/v1/audit/stats", response_model=schemas.StatsOut)
    def audit_stats():
        return application.audit_stats()

    @api.get("/v1/audit/verify", response_model=schemas.VerifyOut)
    def audit_verify():
        return application.verify_audit()

    @api.get("/v1/traces/{trace_id}")
    def get_trace(trace_id: str):
        return application.replay(trace_id)

    @api.get("/v1/metrics")
    def metrics():
        return application.metrics_snapshot()

    # --- agent lifecycle ----------------------------------------------------------

    @api.post("/v1/registry", response_model=schemas.ManifestAck)
    def submit_manifest(body: schemas.ManifestIn):
        return application.submit_manifest(
            body.agent_id, body.model_id, body.prompt_template, body.policies,
            [spec.model_dump() for spec in body.output_schema],
            expected_latest=body.expected_latest,
        )

    @api.get("/v1/registry/{agent_id}")
    def get_manifest(agent_id: str, version: int | None = None):
        return application.get_manifest(agent_id, version)

    @api.get("/v1/rollouts")
    def rollout_states():
        return application.rollout_states()

    @api.post("/v1/rollouts/{agent_id}/stage")
    def stage_candidate(agent_id: str, body: schemas.StageIn):
        return application.stage_candidate(agent_id, body.version)

    @api.post("/v1/rollouts/{agent_id}/promote")
    def promote(agent_id: str, body: schemas.PromoteIn):
        return application.promote(agent_id, body.to_stage)

    @api.post("/v1/rollouts/{agent_id}/rollback")
    def rollback(agent_id: str, body: schemas.RollbackIn):
        return application.rollback(agent_id, body.reason)

    @api.post("/v1/evals/{agent_id}")
    def run_eval(agent_id: str, version: int | None = None):
        return application.eval_agent(agent_id, version)

    return api
