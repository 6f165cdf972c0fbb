"""Agent implementations: intake normalization, intent routing, the
pre-appointment elicitation agent and the post-appointment generation agent."""

from .normalize import Channel, NormalizedMessage, normalize, normalize_text
from .intent import Intent, IntentClassifier, IntentLabel, rule_classify
from .questionnaire import Questionnaire, QuestionSpec, load_default_questionnaire
from .provider import (
    BoundaryRecorder,
    DEFERRAL_TEXT,
    FieldSpec,
    HttpModelProvider,
    MockModelProvider,
    ModelRequest,
    ModelResponse,
)
from .rules import ConsistencyRule, ConsistencyRuleSet, RulesRegistry, default_rules
from .pre_agent import PreAppointmentAgent, StepResult
from .post_agent import PostAppointmentAgent

__all__ = [
    "BoundaryRecorder",
    "Channel",
    "ConsistencyRule",
    "ConsistencyRuleSet",
    "DEFERRAL_TEXT",
    "FieldSpec",
    "HttpModelProvider",
    "Intent",
    "IntentClassifier",
    "IntentLabel",
    "MockModelProvider",
    "ModelRequest",
    "ModelResponse",
    "NormalizedMessage",
    "PostAppointmentAgent",
    "PreAppointmentAgent",
    "Questionnaire",
    "QuestionSpec",
    "RulesRegistry",
    "StepResult",
    "default_rules",
    "load_default_questionnaire",
    "normalize",
    "normalize_text",
    "rule_classify",
]
