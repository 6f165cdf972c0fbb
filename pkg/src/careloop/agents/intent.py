"""Intent classification over normalized text.

The rule table is the default engine and the fallback when a model provider
is configured but failing. Results are cached by message text; the cache hit
rate over a replayed set with d distinct messages and n total is (n-d)/n.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum

from ..errors import ProviderError


class IntentLabel(str, Enum):
    CLINICAL_QUESTION = "clinical_question"
    SCHEDULING_REQUEST = "scheduling_request"
    SYMPTOM_REPORT = "symptom_report"
    ADMINISTRATIVE = "administrative"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Intent:
    label: IntentLabel
    confidence: float
    cache_hit: bool = False


# Phrase lexicons are matched against normalized (casefolded, punctuation-free)
# text, so entries are stored in that same shape. Portuguese and English both
# appear because the inbound channels carry both.
INTERROGATIVES = (
    "para que", "o que", "por que", "qual", "como", "quando", "onde",
    "what", "why", "how", "when", "which", "serve",
)
CLINICAL_TERMS = (
    "exame", "medicamento", "remedio", "resultado", "dose", "tratamento",
    "receita", "vacina", "exam", "medication", "medicine", "dosage",
    "treatment", "prescription", "test result",
)
SCHEDULING_TERMS = (
    "agendar", "marcar", "remarcar", "desmarcar", "horario", "consulta",
    "agenda", "schedule", "appointment", "reschedule", "booking",
)
SYMPTOM_TERMS = (
    "estou com", "sinto", "sentindo", "dor", "febre", "tosse", "enjoo",
    "tontura", "pain", "fever", "cough", "headache", "hurts", "i feel",
    "nausea", "dizzy",
)
ADMIN_TERMS = (
    "convenio", "plano de saude", "pagamento", "boleto", "recibo", "nota fiscal",
    "fatura", "insurance", "invoice", "payment", "billing", "receipt", "address",
    "endereco",
)

CONFIDENCES = {
    IntentLabel.CLINICAL_QUESTION: 0.9,
    IntentLabel.SCHEDULING_REQUEST: 0.85,
    IntentLabel.SYMPTOM_REPORT: 0.8,
    IntentLabel.ADMINISTRATIVE: 0.75,
    IntentLabel.UNKNOWN: 0.2,
}

CONFIDENCE_THRESHOLD = 0.5


def _contains_any(text: str, phrases: tuple[str, ...]) -> bool:
    return any(phrase in text for phrase in phrases)


def rule_classify(text: str) -> Intent:
    """Deterministic table lookup; precedence is fixed so ties cannot flap."""
    if _contains_any(text, INTERROGATIVES) and _contains_any(text, CLINICAL_TERMS):
        label = IntentLabel.CLINICAL_QUESTION
    elif _contains_any(text, SCHEDULING_TERMS):
        label = IntentLabel.SCHEDULING_REQUEST
    elif _contains_any(text, SYMPTOM_TERMS):
        label = IntentLabel.SYMPTOM_REPORT
    elif _contains_any(text, ADMIN_TERMS):
        label = IntentLabel.ADMINISTRATIVE
    else:
        label = IntentLabel.UNKNOWN
    return Intent(label=label, confidence=CONFIDENCES[label])


class IntentClassifier:
    def __init__(self, provider=None):
        self._provider = provider
        self._cache: dict[str, Intent] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def classify(self, text: str) -> Intent:
        with self._lock:
            cached = self._cache.get(text)
            if cached is not None:
                self.hits += 1
                return Intent(cached.label, cached.confidence, cache_hit=True)
            self.misses += 1
        intent = self._classify_fresh(text)
        with self._lock:
            self._cache[text] = intent
        return intent

    def _classify_fresh(self, text: str) -> Intent:
        if self._provider is not None:
            try:
                return self._provider.classify_intent(text)
            except ProviderError:
                pass  # fall back to the rule table
        return rule_classify(text)

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0
