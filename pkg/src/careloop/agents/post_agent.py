"""Post-appointment generation agent.

Builds a fully redacted model request from the encounter context, calls the
provider through the boundary recorder, validates the response against the
manifest output schema and the consistency rule set, retries once with
violation feedback, and either publishes summary.ready_for_review or
agent.failed. Shadow candidates generate in parallel but their outputs only
ever become artifacts, never review tasks.
"""

from __future__ import annotations

import logging

from ..domain import (
    AgentRef,
    ClinicalSummary,
    ContextEntry,
    Encounter,
    EncounterLifecycle,
    EntryKind,
    EventRef,
    Phase,
    redact_for_model,
    render_summary,
)
from ..errors import ProviderError
from ..runtime import Clock
from ..serialization import canonical_json, sha256_hex
from .provider import FieldSpec, ModelRequest, ModelResponse

logger = logging.getLogger(__name__)

AGENT_ID = "post_agent"

ALLOWED_PLACEHOLDERS = {"context", "policies"}


def validate_schema(fields: dict, schema: tuple[FieldSpec, ...]) -> list[dict]:
    """Schema violations in consistency-violation shape; empty means valid."""
    violations = []
    for spec in schema:
        present = spec.name in fields and fields[spec.name] is not None
        if not present:
            if spec.required:
                violations.append(
                    {"rule_id": f"schema:{spec.name}", "detail": "required field missing"}
                )
            continue
        value = fields[spec.name]
        ok = True
        if spec.type in ("text", "code"):
            ok = isinstance(value, str)
        elif spec.type == "number":
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        elif spec.type == "list-of-text":
            ok = isinstance(value, list) and all(isinstance(v, str) for v in value)
        if not ok:
            violations.append(
                {"rule_id": f"schema:{spec.name}", "detail": f"expected {spec.type}"}
            )
    return violations


class PostAppointmentAgent:
    def __init__(self, lifecycle: EncounterLifecycle, repo, registry, rollouts,
                 provider, scanner, artifacts, publisher, rules_registry, clock: Clock):
        self._lifecycle = lifecycle
        self._repo = repo
        self._registry = registry
        self._rollouts = rollouts
        self._provider = provider
        self._scanner = scanner
        self._artifacts = artifacts
        self._publisher = publisher
        self._rules = rules_registry
        self._clock = clock

    # --- event handlers ------------------------------------------------------

    def on_pre_appointment_completed(self, event) -> None:
        """Subscribed trigger; generation waits until consult notes arrive."""
        encounter = self._repo.get(event.payload["encounter_id"])
        if encounter is not None and encounter.phase is Phase.POST_APPOINTMENT:
            self.generate(encounter, EventRef(event.event_id, event.trace_id))

    def on_consult_completed(self, event) -> None:
        encounter = self._repo.get(event.payload["encounter_id"])
        if encounter is not None and encounter.phase is Phase.POST_APPOINTMENT:
            self.generate(encounter, EventRef(event.event_id, event.trace_id))

    def on_requeued(self, event) -> None:
        """Operator path: re-drive a quarantined encounter through generation."""
        encounter = self._repo.get(event.payload["encounter_id"])
        if encounter is None or encounter.phase is not Phase.QUARANTINED:
            return
        cause = EventRef(event.event_id, event.trace_id)
        encounter = self._lifecycle.advance_phase(encounter, Phase.POST_APPOINTMENT, cause)
        self.generate(encounter, cause)

    # --- generation ----------------------------------------------------------

    def generate(self, encounter: Encounter, cause: EventRef) -> None:
        route = self._rollouts.route(AGENT_ID, encounter.trace_id)
        manifest = self._registry.get(AGENT_ID, route.serving_version)
        request = self.build_request(encounter, manifest)

        response, failure = self._attempt_with_retry(request, manifest)
        if failure is not None:
            self._publisher.publish(
                "agent.failed",
                encounter.trace_id,
                {
                    "encounter_id": encounter.encounter_id,
                    "agent_id": AGENT_ID,
                    "agent_version": manifest.version,
                    "reason": failure["reason"],
                    "detail": failure["detail"],
                },
            )
        else:
            self._publish_draft(encounter, manifest, request, response)

        if route.shadow_version is not None:
            self._run_shadow(encounter, route.shadow_version)

    def _attempt_with_retry(self, request: ModelRequest, manifest):
        try:
            response = self._provider.complete(request)
        except ProviderError as exc:
            return None, {"reason": "provider_error", "detail": exc.message}
        violations = self._validate(response, manifest)
        if not violations:
            return response, None
        feedback = "; ".join(f"{v['rule_id']}: {v['detail']}" for v in violations)
        retry = ModelRequest(
            agent_id=request.agent_id,
            agent_version=request.agent_version,
            model_id=request.model_id,
            instruction=request.instruction + f"\n\nYour previous output was invalid ({feedback}). Fix it.",
            context=request.context,
            policies=request.policies,
            output_schema=request.output_schema,
        )
        try:
            response = self._provider.complete(retry)
        except ProviderError as exc:
            return None, {"reason": "provider_error", "detail": exc.message}
        violations = self._validate(response, manifest)
        if violations:
            return None, {
                "reason": "consistency_violation",
                "detail": canonical_json(violations),
            }
        return response, None

    def _validate(self, response: ModelResponse, manifest) -> list[dict]:
        violations = validate_schema(response.fields, manifest.output_schema)
        if violations:
            return violations
        return self._rules.current.evaluate(response.fields)

    def _publish_draft(self, encounter, manifest, request: ModelRequest,
                       response: ModelResponse) -> None:
        summary = ClinicalSummary.create(
            diagnosis=response.fields.get("diagnosis", ""),
            findings=response.fields.get("findings", []),
            plan=response.fields.get("plan", ""),
            codes=response.fields.get("codes", []),
            produced_by=AgentRef(AGENT_ID, manifest.version),
            model_id=manifest.model_id,
        )
        text = render_summary(summary)
        input_digest = sha256_hex(canonical_json(list(request.context)))
        request_snapshot = {
            "context": list(request.context),
            "policies": list(request.policies),
        }
        blob = canonical_json(
            {
                "fields": summary.fields(),
                "text": text,
                "content_hash": summary.content_hash,
                "produced_by": summary.produced_by.label(),
                "model_id": summary.model_id,
                "input_digest": input_digest,
                "request": request_snapshot,
            }
        ).encode("utf-8")
        ref = self._artifacts.put(blob, kind="draft_summary")
        entry = ContextEntry(
            kind=EntryKind.DRAFT_SUMMARY,
            text=text,
            occurred_at=self._clock.now(),
            source_agent=summary.produced_by.label(),
        )
        encounter = self._lifecycle.append_context(encounter, entry)
        self._publisher.publish(
            "summary.ready_for_review",
            encounter.trace_id,
            {
                "encounter_id": encounter.encounter_id,
                "artifact_id": ref.artifact_id,
                "content_hash": summary.content_hash,
                "agent_id": AGENT_ID,
                "agent_version": manifest.version,
                "model_id": manifest.model_id,
                "summary": summary.fields(),
                "text": text,
                "input_digest": input_digest,
                "request": request_snapshot,
            },
        )

    def _run_shadow(self, encounter: Encounter, shadow_version: int) -> None:
        manifest = self._registry.get(AGENT_ID, shadow_version)
        request = self.build_request(encounter, manifest)
        try:
            response = self._provider.complete(request)
        except ProviderError as exc:
            logger.info("shadow generation failed (ignored): %s", exc)
            return
        blob = canonical_json(
            {
                "fields": response.fields,
                "agent_version": shadow_version,
                "encounter_id": encounter.encounter_id,
            }
        ).encode("utf-8")
        self._artifacts.put(blob, kind="shadow_output")

    # --- request building ----------------------------------------------------

    def build_request(self, encounter: Encounter, manifest) -> ModelRequest:
        lines = []
        for entry in encounter.context:
            if entry.kind in (EntryKind.DRAFT_SUMMARY, EntryKind.FINAL_SUMMARY):
                continue
            redacted = redact_for_model(entry, self._scanner)
            lines.append(f"{entry.kind.value}: {redacted.text}")
        instruction = manifest.render_instruction(lines)
        return ModelRequest(
            agent_id=AGENT_ID,
            agent_version=manifest.version,
            model_id=manifest.model_id,
            instruction=instruction,
            context=tuple(lines),
            policies=tuple(manifest.policies),
            output_schema=tuple(manifest.output_schema),
        )
