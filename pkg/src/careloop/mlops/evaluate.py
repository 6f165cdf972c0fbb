"""Offline evaluation of a manifest against the reviewer-built golden set.

Each golden example replays its stored (already redacted) model inputs through
the candidate manifest. Structured fields must match exactly; free-text fields
pass on token-level F1 at or above the threshold. The eval score is the
passing fraction.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from datetime import datetime

from ..domain import AgentRef, ClinicalSummary, render_summary
from ..errors import EmptyGoldenSet, ProviderError
from ..serialization import canonical_json

_CLINICAL_FIELDS = {"diagnosis", "findings", "plan", "codes"}


def token_f1(expected: str, actual: str) -> float:
    expected_tokens = expected.casefold().split()
    actual_tokens = actual.casefold().split()
    if not expected_tokens and not actual_tokens:
        return 1.0
    if not expected_tokens or not actual_tokens:
        return 0.0
    overlap = sum((Counter(expected_tokens) & Counter(actual_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(actual_tokens)
    recall = overlap / len(expected_tokens)
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class ExampleResult:
    source_task_id: str
    ok: bool
    detail: str


@dataclass(frozen=True)
class EvalResult:
    agent_id: str
    version: int
    score: float
    total: int
    passing: int
    results: tuple
    evaluated_at: datetime

    def to_payload(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "version": self.version,
            "score": self.score,
            "examples": self.total,
        }


def _render_response(manifest, fields: dict) -> str:
    names = {spec.name for spec in manifest.output_schema}
    if _CLINICAL_FIELDS <= names:
        summary = ClinicalSummary.create(
            diagnosis=fields.get("diagnosis", ""),
            findings=fields.get("findings", []),
            plan=fields.get("plan", ""),
            codes=fields.get("codes", []),
            produced_by=AgentRef(manifest.agent_id, manifest.version),
            model_id=manifest.model_id,
        )
        return render_summary(summary)
    return "\n".join(f"{name}: {fields[name]}" for name in sorted(fields))


def _compare_fields(manifest, expected: dict, actual: dict, f1_threshold: float):
    text_fields = {s.name for s in manifest.output_schema if s.type == "text"}
    for name, want in expected.items():
        if name not in actual:
            return False, f"{name}: missing from response"
        got = actual[name]
        if name in text_fields and isinstance(want, str) and isinstance(got, str):
            score = token_f1(want, got)
            if score < f1_threshold:
                return False, f"{name}: token F1 {score:.3f} below {f1_threshold}"
        elif canonical_json(want) != canonical_json(got):
            return False, f"{name}: expected {want!r}, got {got!r}"
    return True, "ok"


def _evaluate_example(manifest, provider, example, f1_threshold: float) -> ExampleResult:
    context = example.eval_request.get("context", [])
    try:
        response = provider.complete(manifest.build_request(context))
    except ProviderError as exc:
        return ExampleResult(example.source_task_id, False, f"provider: {exc.message}")
    expected_fields = example.corrected_output.get("fields")
    if expected_fields is not None:
        ok, detail = _compare_fields(
            manifest, expected_fields, response.fields, f1_threshold
        )
        return ExampleResult(example.source_task_id, ok, detail)
    rendered = _render_response(manifest, response.fields)
    score = token_f1(example.corrected_output.get("text", ""), rendered)
    if score >= f1_threshold:
        return ExampleResult(example.source_task_id, True, f"text F1 {score:.3f}")
    return ExampleResult(
        example.source_task_id, False, f"text F1 {score:.3f} below {f1_threshold}"
    )


def offline_eval(manifest, provider, examples, f1_threshold: float = 0.8,
                 clock=None) -> EvalResult:
    examples = list(examples)
    if not examples:
        raise EmptyGoldenSet("no golden examples to evaluate against")
    results = tuple(
        _evaluate_example(manifest, provider, ex, f1_threshold) for ex in examples
    )
    passing = sum(1 for r in results if r.ok)
    evaluated_at = clock.now() if clock is not None else datetime.now().astimezone()
    return EvalResult(
        agent_id=manifest.agent_id,
        version=manifest.version,
        score=passing / len(results),
        total=len(results),
        passing=passing,
        results=results,
        evaluated_at=evaluated_at,
    )
