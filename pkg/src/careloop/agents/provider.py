"""Model provider port types, the deterministic mock provider, and the
PII boundary recorder that audits every outbound request.

The mock derives every response from a seeded hash of the request content, so
identical requests always produce byte-identical responses. Scripted behaviors
(timeouts, malformed output, missing diagnosis, dosage-question deferrals) are
queued per upcoming call to drive failure-path tests and scenarios.
"""

from __future__ import annotations

import random
import threading
from collections import deque
from dataclasses import dataclass, field

import httpx

from ..errors import ProviderError
from ..serialization import canonical_json, sha256_hex
from .intent import Intent, rule_classify

FIELD_TYPES = ("text", "number", "list-of-text", "code")

DEFERRAL_TEXT = "This needs a clinician's judgment, please consult your medical team."

# Behavioral policy ids a manifest can declare, with the request phrases that
# trigger them. The mock defers only when the triggered policy is declared;
# that is exactly what the red-team check relies on.
TRIGGER_POLICIES: dict[str, tuple[str, ...]] = {
    "defer_on_medication_dosage": (
        "double my dose", "change my dose", "increase my dose",
        "double the dose", "how much should i take", "dobrar a dose",
        "aumentar a dose", "medication dosage",
    ),
    "defer_on_self_harm": (
        "hurt myself", "kill myself", "harm myself", "me machucar",
    ),
    "refuse_pii_elicitation": (
        "phone number of", "address of patient", "cpf of", "contact details of",
    ),
}

_DIAGNOSES = (
    "tension-type headache",
    "viral upper respiratory infection",
    "acute gastroenteritis",
    "migraine without aura",
    "allergic rhinitis",
    "lumbar muscle strain",
)
_CODES = ("R51", "J06.9", "A09", "G43.0", "J30.4", "M54.5")
_PLANS = (
    "rest, hydration and a follow-up visit in 7 days",
    "symptomatic treatment and re-evaluation in 48 hours",
    "analgesia as needed and return if symptoms worsen",
    "watchful waiting with a scheduled phone check-in",
)


@dataclass(frozen=True)
class FieldSpec:
    name: str
    type: str
    required: bool = True

    def __post_init__(self):
        if self.type not in FIELD_TYPES:
            raise ValueError(f"unknown field type: {self.type}")

    def to_dict(self) -> dict:
        return {"name": self.name, "type": self.type, "required": self.required}


@dataclass(frozen=True)
class ModelRequest:
    agent_id: str
    agent_version: int
    model_id: str
    instruction: str
    context: tuple[str, ...]
    policies: tuple[str, ...]
    output_schema: tuple[FieldSpec, ...]

    def content_key(self) -> str:
        return canonical_json(
            {
                "agent_id": self.agent_id,
                "agent_version": self.agent_version,
                "model_id": self.model_id,
                "instruction": self.instruction,
                "context": list(self.context),
                "policies": list(self.policies),
                "output_schema": [f.to_dict() for f in self.output_schema],
            }
        )

    def texts(self) -> list[str]:
        return [self.instruction, *self.context]


@dataclass(frozen=True)
class ModelResponse:
    fields: dict
    model_id: str
    latency_ms: float = 0.0

    def to_bytes(self) -> bytes:
        return canonical_json({"fields": self.fields, "model_id": self.model_id}).encode("utf-8")


class MockModelProvider:
    """Deterministic, scriptable stand-in for an external LLM."""

    def __init__(self, seed: int = 0):
        self._seed = seed
        self._scripts: deque[str] = deque()
        self._lock = threading.Lock()
        self.calls = 0

    def script(self, scenario: str, times: int = 1) -> None:
        known = {"timeout", "malformed", "missing_diagnosis", "medication_dosage_query"}
        if scenario not in known:
            raise ValueError(f"unknown scripted scenario: {scenario}")
        with self._lock:
            for _ in range(times):
                self._scripts.append(scenario)

    def pending_scripts(self) -> int:
        with self._lock:
            return len(self._scripts)

    def complete(self, request: ModelRequest) -> ModelResponse:
        with self._lock:
            self.calls += 1
            scenario = self._scripts.popleft() if self._scripts else None
        if scenario == "timeout":
            raise ProviderError("simulated provider timeout", scenario=scenario)
        if scenario == "malformed":
            return ModelResponse(fields={"unexpected": "garbage"}, model_id=request.model_id)
        if scenario == "medication_dosage_query":
            return self._deferral(request)
        fields = self._generate(request)
        if scenario == "missing_diagnosis" and "diagnosis" in fields:
            fields["diagnosis"] = ""
        return ModelResponse(fields=fields, model_id=request.model_id)

    def classify_intent(self, text: str) -> Intent:
        return rule_classify(text)

    # --- generation ---------------------------------------------------------

    def _deferral(self, request: ModelRequest) -> ModelResponse:
        fields = {}
        for spec in request.output_schema:
            if spec.type == "text":
                fields[spec.name] = DEFERRAL_TEXT
            elif spec.type == "number":
                fields[spec.name] = 0
            elif spec.type == "list-of-text":
                fields[spec.name] = [DEFERRAL_TEXT] if spec.required else []
            else:
                fields[spec.name] = "Z71.9"  # counseling, unspecified
        return ModelResponse(fields=fields, model_id=request.model_id)

    def _triggered_policy(self, request: ModelRequest) -> str | None:
        haystack = " ".join(request.texts()).casefold()
        for policy_id, phrases in TRIGGER_POLICIES.items():
            if any(phrase in haystack for phrase in phrases):
                return policy_id
        return None

    def _generate(self, request: ModelRequest) -> dict:
        triggered = self._triggered_policy(request)
        if triggered is not None and triggered in request.policies:
            return self._deferral(request).fields

        digest = sha256_hex(f"{self._seed}|{request.content_key()}")
        rng = random.Random(int(digest[:16], 16))
        pick = rng.randrange(len(_DIAGNOSES))
        plan_pick = rng.randrange(len(_PLANS))
        reported = [
            line.split(":", 1)[1].strip()
            for line in request.context
            if line.startswith("patient_answer:") and ":" in line
        ]
        fields: dict = {}
        for spec in request.output_schema:
            if spec.name == "diagnosis":
                fields[spec.name] = _DIAGNOSES[pick]
            elif spec.name == "plan":
                fields[spec.name] = _PLANS[plan_pick]
            elif spec.name == "findings":
                items = [f"patient reports {r}" for r in reported[:3]]
                fields[spec.name] = items or [f"presentation {digest[:6]}"]
            elif spec.name == "codes":
                fields[spec.name] = [_CODES[pick]]
            elif spec.type == "text":
                topic = reported[0] if reported else digest[:8]
                fields[spec.name] = f"{spec.name} for {topic}: assessment {digest[8:14]}"
            elif spec.type == "number":
                fields[spec.name] = rng.randint(1, 9)
            elif spec.type == "list-of-text":
                fields[spec.name] = [f"{spec.name} {digest[:6]}"]
            else:  # code
                fields[spec.name] = _CODES[rng.randrange(len(_CODES))]
        return fields


class HttpModelProvider:
    """Optional adapter for a real HTTP provider endpoint."""

    def __init__(self, url: str, client: httpx.Client | None = None):
        self._url = url
        self._client = client or httpx.Client(timeout=30.0)

    def complete(self, request: ModelRequest) -> ModelResponse:
        try:
            response = self._client.post(
                self._url,
                json={
                    "instruction": request.instruction,
                    "context": list(request.context),
                    "policies": list(request.policies),
                    "output_schema": [f.to_dict() for f in request.output_schema],
                    "model_id": request.model_id,
                },
            )
            response.raise_for_status()
            body = response.json()
        except Exception as exc:
            raise ProviderError(f"http provider failed: {exc}")
        if not isinstance(body, dict) or "fields" not in body:
            raise ProviderError("http provider returned an unexpected body")
        return ModelResponse(
            fields=body["fields"],
            model_id=body.get("model_id", request.model_id),
            latency_ms=float(body.get("latency_ms", 0.0)),
        )


class BoundaryRecorder:
    """Wraps a provider; scans every outbound text and tallies PII findings.

    Installed permanently in the composition root: the finding count doubles
    as the runtime assertion that redaction happened before the boundary.
    """

    def __init__(self, inner, scanner):
        self._inner = inner
        self._scanner = scanner
        self.findings: list = []
        self.requests_seen = 0
        self._lock = threading.Lock()

    def complete(self, request: ModelRequest) -> ModelResponse:
        found = []
        for text in request.texts():
            found.extend(self._scanner.scan(text))
        with self._lock:
            self.requests_seen += 1
            self.findings.extend(found)
        return self._inner.complete(request)

    def classify_intent(self, text: str):
        with self._lock:
            self.requests_seen += 1
            self.findings.extend(self._scanner.scan(text))
        return self._inner.classify_intent(text)
