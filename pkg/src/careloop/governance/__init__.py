"""Human-in-the-loop governance: review tasks, decisions, audit chain, stats."""

from .audit import AuditAction, AuditLog, AuditRecord, verify_audit_file
from .review import (
    DecisionOutcome,
    GoldenExample,
    Provenance,
    ReviewDecision,
    ReviewOrchestrator,
    ReviewStatus,
    ReviewTask,
    VERIFICATION_MESSAGE,
)

__all__ = [
    "AuditAction",
    "AuditLog",
    "AuditRecord",
    "DecisionOutcome",
    "GoldenExample",
    "Provenance",
    "ReviewDecision",
    "ReviewOrchestrator",
    "ReviewStatus",
    "ReviewTask",
    "VERIFICATION_MESSAGE",
    "verify_audit_file",
]
