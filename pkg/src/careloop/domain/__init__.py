"""Core domain: encounter state machine, clinical summaries, policies, ports.

This package is the innermost layer. It may import only the shared leaf
modules (errors, serialization) and declares abstract ports for everything
else; concrete adapters live outside and are injected.
"""

from .encounter import (
    ContextEntry,
    Encounter,
    EncounterLifecycle,
    EntryKind,
    EventRef,
    LEGAL_EDGES,
    Phase,
    happy_path,
    redact_for_model,
)
from .policies import (
    AgentRef,
    ClinicalSummary,
    PolicyVerdict,
    UseCasePolicy,
    default_policies,
    evaluate_policies,
    render_summary,
)
from . import ports

__all__ = [
    "AgentRef",
    "ClinicalSummary",
    "ContextEntry",
    "Encounter",
    "EncounterLifecycle",
    "EntryKind",
    "EventRef",
    "LEGAL_EDGES",
    "Phase",
    "PolicyVerdict",
    "UseCasePolicy",
    "default_policies",
    "evaluate_policies",
    "happy_path",
    "ports",
    "redact_for_model",
    "render_summary",
]
