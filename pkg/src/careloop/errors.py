"""Error taxonomy for the whole engine.

Each error carries a stable `code` that feeds API error bodies ({code, message,
detail}) and CLI diagnostics. Modules raise these instead of bare exceptions so
the HTTP layer can map them without isinstance ladders per endpoint.
"""

from __future__ import annotations


class WorkflowError(Exception):
    code = "workflow_error"

    def __init__(self, message: str = "", **detail):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.detail = detail


# core domain

class IllegalTransition(WorkflowError):
    code = "illegal_transition"


class StaleVersion(WorkflowError):
    code = "stale_version"


class EventTraceMismatch(WorkflowError):
    code = "event_trace_mismatch"


class ScannerUnavailable(WorkflowError):
    code = "scanner_unavailable"


class UnknownEncounter(WorkflowError):
    code = "unknown_encounter"


# event bus

class SchemaViolation(WorkflowError):
    code = "schema_violation"


class LogUnavailable(WorkflowError):
    code = "log_unavailable"


class DuplicateSubscriberId(WorkflowError):
    code = "duplicate_subscriber_id"


class InvalidPattern(WorkflowError):
    code = "invalid_pattern"


# agents

class InvalidAnswer(WorkflowError):
    code = "invalid_answer"


class ProviderError(WorkflowError):
    code = "provider_error"


class ConsistencyViolation(WorkflowError):
    code = "consistency_violation"


class UnknownAuditRef(WorkflowError):
    code = "unknown_audit_ref"


# governance

class NotFound(WorkflowError):
    code = "not_found"


class TaskNotPending(WorkflowError):
    code = "task_not_pending"


class MissingCorrectedText(WorkflowError):
    code = "missing_corrected_text"


class MissingRejectReason(WorkflowError):
    code = "missing_reject_reason"


class CorrectedTextUnchanged(WorkflowError):
    code = "corrected_text_unchanged"


# mlops

class ChecksFailed(WorkflowError):
    code = "checks_failed"

    def __init__(self, message: str = "", report=None, **detail):
        super().__init__(message, **detail)
        self.report = report


class VersionConflict(WorkflowError):
    code = "version_conflict"


class EvalGateFailed(WorkflowError):
    code = "eval_gate_failed"


class IllegalStageJump(WorkflowError):
    code = "illegal_stage_jump"


class EmptyGoldenSet(WorkflowError):
    code = "empty_golden_set"


class InsufficientBaseline(WorkflowError):
    code = "insufficient_baseline"


class DuplicateTaskFeedback(WorkflowError):
    code = "duplicate_task_feedback"


# platform

class StoreUnavailable(WorkflowError):
    code = "store_unavailable"


class EmptyWindow(WorkflowError):
    code = "empty_window"


class ConfigError(WorkflowError):
    code = "config_error"


class ScenarioError(WorkflowError):
    code = "scenario_error"


class ValidationFailed(WorkflowError):
    code = "validation_failed"
