"""Composition root: wires stores, bus, agents, governance and rollout into a
single process and exposes the operations the HTTP API, CLI and scenario
runner call.

On startup with file storage, runtime state is rebuilt from the durable
surfaces alone (event log, audit log, artifacts, golden set, registry and
rollout snapshots), so a killed process resumes exactly where it stopped.
"""

from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
from dataclasses import replace

from .agents import (
    Channel,
    IntentClassifier,
    IntentLabel,
    PostAppointmentAgent,
    PreAppointmentAgent,
    RulesRegistry,
    load_default_questionnaire,
    normalize,
)
from .agents.post_agent import AGENT_ID as POST_AGENT_ID
from .agents.provider import BoundaryRecorder, FieldSpec, MockModelProvider
from .bus import DomainEvent, EventBus, Subscription
from .domain import (
    ContextEntry,
    Encounter,
    EncounterLifecycle,
    EntryKind,
    EventRef,
    Phase,
)
from .errors import (
    ChecksFailed,
    IllegalTransition,
    InvalidAnswer,
    NotFound,
    ValidationFailed,
    WorkflowError,
)
from .governance import (
    AuditAction,
    AuditLog,
    DecisionOutcome,
    GoldenExample,
    Provenance,
    ReviewDecision,
    ReviewOrchestrator,
    ReviewStatus,
    ReviewTask,
)
from .infra import (
    AppConfig,
    CompositeNotifier,
    FileArtifactStore,
    FileEventLog,
    FileGoldenStore,
    IdentityVault,
    InMemoryEventLog,
    LogNotifier,
    MemoryArtifactStore,
    MemoryEncounterRepository,
    MemoryGoldenStore,
    MemoryTaskStore,
    MetricsRegistry,
    PiiPattern,
    RegexPiiScanner,
    WebhookNotifier,
    default_patterns,
)
from .mlops import (
    AgentManifest,
    FeedbackLoop,
    ManifestRegistry,
    RolloutManager,
    offline_eval,
    run_checks,
)
from .runtime import Clock, IdGenerator, SimulatedClock
from .serialization import format_ts, parse_ts, sha256_hex

logger = logging.getLogger(__name__)

DEFAULT_MODEL_ID = "mock-clinical-v1"

DEFAULT_PROMPT_TEMPLATE = (
    "You are the post-appointment documentation agent for a primary care desk.\n"
    "Write a structured clinical summary of the encounter below.\n\n"
    "Encounter context:\n{{context}}\n\n"
    "Behavioral policies in force: {{policies}}\n\n"
    "Respond with every field declared in the output schema."
)

DEFAULT_POLICIES = (
    "require_diagnosis_field",
    "defer_on_medication_dosage",
    "defer_on_self_harm",
    "refuse_pii_elicitation",
)

DEFAULT_OUTPUT_SCHEMA = (
    FieldSpec("diagnosis", "text"),
    FieldSpec("findings", "list-of-text"),
    FieldSpec("plan", "text"),
    FieldSpec("codes", "list-of-text"),
)

_STATUS_BY_OUTCOME = {
    "approve": ReviewStatus.APPROVED,
    "correct": ReviewStatus.CORRECTED,
    "reject": ReviewStatus.REJECTED,
}


class BusPublisher:
    """EventPublisher port over the bus: stamps id, time and producer."""

    def __init__(self, bus: EventBus, clock: Clock, idgen: IdGenerator,
                 producer: str = "careloop"):
        self._bus = bus
        self._clock = clock
        self._idgen = idgen
        self._producer = producer

    def publish(self, event_type: str, trace_id: str, payload: dict) -> str:
        event = DomainEvent(
            event_id=self._idgen.uuid("ev-"),
            trace_id=trace_id,
            event_type=event_type,
            occurred_at=self._clock.now(),
            producer=self._producer,
            payload=payload,
        )
        self._bus.publish(event)
        return event.event_id


class TraceLocks:
    """One reentrant lock per trace so facade calls and bus handlers touching
    the same encounter serialize against each other."""

    def __init__(self):
        self._locks: dict[str, threading.RLock] = {}
        self._guard = threading.Lock()

    def __call__(self, trace_id: str) -> threading.RLock:
        with self._guard:
            return self._locks.setdefault(trace_id, threading.RLock())


class Application:
    def __init__(self, config: AppConfig | None = None, *,
                 publish_duplication: int = 1, delivery_duplication: int = 1):
        self.config = config = config or AppConfig()
        seeded = config.seed is not None
        file_mode = config.storage == "file"

        if file_mode:
            os.makedirs(config.data_dir, exist_ok=True)
            log = FileEventLog(config.path("events.log"))
        else:
            log = InMemoryEventLog()
        self.clock, self.idgen = self._time_and_ids(config.seed, seeded, log)

        if file_mode:
            self.artifacts = FileArtifactStore(config.path("artifacts"), self.clock)
            self.audit = AuditLog(self.clock, path=config.path("audit.log"))
            self.golden = FileGoldenStore(
                config.path("golden.jsonl"), decoder=GoldenExample.from_dict
            )
            registry_dir = config.path("registry")
            rollout_path = config.path("rollouts.json")
            self.vault = IdentityVault(config.path("identities.json"))
        else:
            self.artifacts = MemoryArtifactStore(self.clock)
            self.audit = AuditLog(self.clock)
            self.golden = MemoryGoldenStore()
            registry_dir = None
            rollout_path = None
            self.vault = IdentityVault()

        self.metrics = MetricsRegistry()
        self.bus = EventBus(
            log,
            self.clock,
            workers=config.bus_workers,
            backoff_base_ms=config.backoff_base_ms,
            backoff_factor=config.backoff_factor,
            backoff_jitter_pct=config.backoff_jitter_pct,
            backoff_cap_ms=config.backoff_cap_ms,
            rng=random.Random(config.seed),
            metrics=self.metrics,
            publish_duplication=publish_duplication,
            delivery_duplication=delivery_duplication,
        )
        self.publisher = BusPublisher(self.bus, self.clock, self.idgen)

        patterns = list(default_patterns()) + [
            PiiPattern(*triple) for triple in config.pii_patterns
        ]
        self.scanner = RegexPiiScanner(patterns)
        self.mock = MockModelProvider(seed=config.seed or 0)
        self.provider = BoundaryRecorder(self.mock, self.scanner)
        # separate unscripted instance so evals never consume scripted faults
        self.eval_provider = MockModelProvider(seed=config.seed or 0)

        self.repo = MemoryEncounterRepository()
        self.tasks = MemoryTaskStore()
        self.registry = ManifestRegistry(
            self.clock, publisher=self.publisher, dir_path=registry_dir
        )
        self.rollouts = RolloutManager(
            self.registry, self.golden, self.eval_provider, self.audit,
            self.publisher, self.clock,
            window=config.guardrail_window,
            breach_threshold=config.breach_threshold,
            eval_gate=config.eval_gate,
            f1_threshold=config.f1_threshold,
            path=rollout_path,
        )
        self.lifecycle = EncounterLifecycle(self.repo, self.publisher)
        self.questionnaire = load_default_questionnaire()
        self.pre_agent = PreAppointmentAgent(
            self.lifecycle, self.questionnaire, self.artifacts, self.publisher, self.clock
        )
        self.rules_registry = RulesRegistry(self.audit, self.publisher)
        self.post_agent = PostAppointmentAgent(
            self.lifecycle, self.repo, self.registry, self.rollouts, self.provider,
            self.scanner, self.artifacts, self.publisher, self.rules_registry, self.clock,
        )
        self.intent_classifier = IntentClassifier(provider=self.mock)
        self.trace_locks = TraceLocks()
        self.orchestrator = ReviewOrchestrator(
            self.tasks, self.lifecycle, self.repo, self.audit, self.golden,
            self.publisher, self.clock, self.idgen, self.trace_locks,
        )
        self.feedback = FeedbackLoop(
            self.tasks, self.golden, self.registry, self.eval_provider,
            self.publisher, self.clock, f1_threshold=config.f1_threshold,
        )
        sinks = [LogNotifier(self.clock)]
        if config.webhook_url:
            sinks.append(WebhookNotifier(config.webhook_url, self.clock))
        self.notifier = CompositeNotifier(self.clock, sinks)

        self._rebuild_from_durable_state()
        self._bootstrap_default_agent()
        self._subscribe_all()

    # --- startup --------------------------------------------------------------

    @staticmethod
    def _time_and_ids(seed: int | None, seeded: bool, log) -> tuple:
        """Clock and id stream for this process lifetime.

        A fresh seeded run replays byte-identically. When durable events
        already exist, the id stream forks off the log tail and the clock
        resumes past it, so continued work cannot collide with or predate
        anything already on disk.
        """
        if not seeded:
            return Clock(), IdGenerator(None)
        events = log.read_all()
        if not events:
            return SimulatedClock(), IdGenerator(seed)
        tail = events[-1]
        fork = int(sha256_hex(f"{seed}:{tail.chain_hash}"), 16) % (2 ** 63)
        return SimulatedClock(start=tail.occurred_at), IdGenerator(fork)

    def _rebuild_from_durable_state(self) -> None:
        events = self.bus.log.read_all()
        for event in events:
            payload = event.payload
            if event.event_type == "encounter.created":
                self.repo.force_put(Encounter(
                    encounter_id=payload["encounter_id"],
                    patient_ref=payload["patient_ref"],
                    trace_id=event.trace_id,
                ))
            elif event.event_type == "encounter.phase_changed":
                encounter = self.repo.get(payload["encounter_id"])
                if encounter is not None:
                    self.repo.force_put(replace(
                        encounter,
                        phase=Phase(payload["to_phase"]),
                        version=payload["version"],
                    ))
            elif event.event_type == "encounter.context_appended":
                encounter = self.repo.get(payload["encounter_id"])
                if encounter is not None:
                    entry = ContextEntry.from_dict(payload["entry"])
                    self.repo.force_put(replace(
                        encounter,
                        context=encounter.context + (entry,),
                        version=payload["version"],
                    ))

        for record in self.audit.records():
            if record.action == AuditAction.TASK_CREATED:
                detail = json.loads(record.detail)
                blob = json.loads(
                    self.artifacts.get(detail["artifact_id"]).decode("utf-8")
                )
                self.tasks.put(ReviewTask(
                    task_id=detail["task_id"],
                    trace_id=record.trace_id,
                    encounter_id=detail["encounter_id"],
                    subject_text=blob["text"],
                    content_hash=detail["content_hash"],
                    artifact_id=detail["artifact_id"],
                    input_digest=detail["input_digest"],
                    provenance=Provenance(**detail["provenance"]),
                    summary_fields=blob["fields"],
                    eval_request=blob["request"],
                    status=ReviewStatus.PENDING,
                    created_at=parse_ts(detail["created_at"]),
                ))
            elif record.action == AuditAction.EXPIRED:
                detail = json.loads(record.detail)
                task = self.tasks.get(detail["task_id"])
                if task is not None:
                    self.tasks.put(replace(task, status=ReviewStatus.EXPIRED))

        for event in events:
            if event.event_type != "review.decided":
                continue
            payload = event.payload
            task = self.tasks.get(payload["task_id"])
            if task is None:
                continue
            decided_at = (
                parse_ts(payload["decided_at"])
                if payload.get("decided_at") else event.occurred_at
            )
            self.tasks.put(replace(
                task,
                status=_STATUS_BY_OUTCOME[payload["outcome"]],
                reviewer_id=payload["reviewer_id"],
                corrected_text=payload.get("corrected_text"),
                reject_reason=payload.get("reject_reason"),
                decided_at=decided_at,
            ))

    def _bootstrap_default_agent(self) -> None:
        if self.registry.has(POST_AGENT_ID):
            manifest = self.registry.get(POST_AGENT_ID)
        else:
            manifest, _ = self.registry.submit(
                POST_AGENT_ID, DEFAULT_MODEL_ID, DEFAULT_PROMPT_TEMPLATE,
                DEFAULT_POLICIES, DEFAULT_OUTPUT_SCHEMA,
            )
        self.rollouts.activate(POST_AGENT_ID, manifest.version)

    def _subscribe_all(self) -> None:
        subs = [("pre_agent", "message.received", self._on_message)]
        if self.config.enable_post_agent:
            subs += [
                ("post_agent", "pre_appointment.completed",
                 self._wrap(self.post_agent.on_pre_appointment_completed)),
                ("post_agent", "consult.completed",
                 self._wrap(self.post_agent.on_consult_completed)),
                ("post_agent", "operator.requeued",
                 self._wrap(self.post_agent.on_requeued)),
            ]
        subs += [
            ("governance", "summary.ready_for_review", self._on_summary_ready),
            ("guardrail_ok", "summary.ready_for_review", self._on_guardrail_ok),
            ("guardrail", "agent.failed", self._on_agent_failed),
            ("feedback", "review.decided", self._wrap(self.feedback.on_review_decided)),
            ("notifier", "notification.requested", self._on_notification),
        ]
        for subscriber_id, pattern, handler in subs:
            self.bus.subscribe(Subscription(
                subscriber_id, pattern, handler, max_retries=self.config.max_retries
            ))

    def _wrap(self, handler):
        """Domain rejections are expected and already recorded; they must not
        burn retries or dead-letter. Anything else propagates to the bus."""

        def run(event):
            try:
                handler(event)
            except WorkflowError as exc:
                logger.warning("handler rejected %s: %s", event.event_type, exc.message)

        return run

    # --- bus handlers -----------------------------------------------------------

    def _on_message(self, event) -> None:
        if self.config.agent_delay_seconds > 0:
            time.sleep(self.config.agent_delay_seconds)
        payload = event.payload
        cause = EventRef(event.event_id, event.trace_id)
        with self.trace_locks(event.trace_id):
            encounter = self.repo.get(payload["encounter_id"])
            if encounter is None:
                logger.warning("message for unknown encounter %s", payload["encounter_id"])
                return
            if (encounter.phase is Phase.AWAITING_CONSULT
                    and payload["channel"] == Channel.FORM.value):
                self._attach_consult_notes(encounter, payload["text"], cause)
                return
            if encounter.phase in (Phase.INTAKE, Phase.PRE_APPOINTMENT):
                try:
                    self.pre_agent.step(encounter, payload["text"], cause)
                except InvalidAnswer:
                    pass  # re-ask already appended and notified
                return
            logger.info(
                "message ignored: encounter %s is in phase %s",
                encounter.encounter_id, encounter.phase.value,
            )

    def _attach_consult_notes(self, encounter, text: str, cause: EventRef) -> None:
        entry = ContextEntry(
            kind=EntryKind.PATIENT_MESSAGE,
            text=text,
            occurred_at=self.clock.now(),
            source_agent="clinician",
        )
        encounter = self.lifecycle.append_context(encounter, entry)
        event_id = self.publisher.publish(
            "consult.completed", encounter.trace_id,
            {"encounter_id": encounter.encounter_id},
        )
        self.lifecycle.advance_phase(
            encounter, Phase.POST_APPOINTMENT, EventRef(event_id, encounter.trace_id)
        )

    def _on_summary_ready(self, event) -> None:
        try:
            self.orchestrator.on_summary_ready(event)
        except WorkflowError as exc:
            logger.warning("summary rejected: %s", exc.message)

    def _on_guardrail_ok(self, event) -> None:
        payload = event.payload
        self.rollouts.record_outcome(payload["agent_id"], payload["agent_version"], True)

    def _on_agent_failed(self, event) -> None:
        payload = event.payload
        self.rollouts.record_outcome(payload["agent_id"], payload["agent_version"], False)

    def _on_notification(self, event) -> None:
        payload = event.payload
        self.notifier.notify(payload["channel_hint"], payload["message"], payload["reason"])

    # --- ingestion --------------------------------------------------------------

    def ingest_message(self, patient_identity: str | None, text: str,
                       channel: str = "text", encounter_id: str | None = None) -> dict:
        if not text or not text.strip():
            raise ValidationFailed("message text must not be empty")
        try:
            chan = Channel(channel)
        except ValueError:
            raise ValidationFailed("unknown channel", channel=channel)

        if encounter_id is not None:
            encounter = self.lifecycle.require(encounter_id)
        else:
            if not patient_identity or not patient_identity.strip():
                raise ValidationFailed("patient identity required for a new encounter")
            patient_ref = self.vault.pseudonymize(patient_identity.strip())
            encounter = self.lifecycle.create(
                self.idgen.uuid("enc-"), patient_ref, self.idgen.uuid("tr-")
            )

        normalized = normalize(text, chan, received_at=self.clock.now())
        redacted = self.scanner.redact(normalized.text)
        intent = self.intent_classifier.classify(redacted)
        event_id = self.publisher.publish(
            "message.received", encounter.trace_id,
            {
                "encounter_id": encounter.encounter_id,
                "channel": chan.value,
                "text": redacted,
                "intent": {
                    "label": intent.label.value,
                    "confidence": intent.confidence,
                    "cache_hit": intent.cache_hit,
                },
            },
        )
        if intent.label is IntentLabel.UNKNOWN:
            self.publisher.publish(
                "notification.requested", encounter.trace_id,
                {
                    "channel_hint": "operators",
                    "recipient": "operations",
                    "message": "message needs manual triage",
                    "reason": "unknown_intent",
                },
            )
        return {
            "accepted": True,
            "encounter_id": encounter.encounter_id,
            "trace_id": encounter.trace_id,
            "event_id": event_id,
            "intent": {"label": intent.label.value, "confidence": intent.confidence},
        }

    def attach_consult_notes(self, encounter_id: str, notes: str) -> dict:
        encounter = self.lifecycle.require(encounter_id)
        if encounter.phase is not Phase.AWAITING_CONSULT:
            raise IllegalTransition(
                "consult notes only apply while awaiting the consult",
                phase=encounter.phase.value,
            )
        return self.ingest_message(
            None, notes, channel=Channel.FORM.value, encounter_id=encounter_id
        )

    # --- reads -------------------------------------------------------------------

    def get_encounter(self, encounter_id: str) -> dict:
        encounter = self.lifecycle.require(encounter_id)
        return {
            "encounter_id": encounter.encounter_id,
            "patient_ref": encounter.patient_ref,
            "trace_id": encounter.trace_id,
            "phase": encounter.phase.value,
            "version": encounter.version,
            "context": [entry.to_dict() for entry in encounter.context],
        }

    def list_encounters(self) -> list:
        return sorted(self.repo.list_ids())

    def _task_dict(self, task: ReviewTask) -> dict:
        return {
            "task_id": task.task_id,
            "trace_id": task.trace_id,
            "encounter_id": task.encounter_id,
            "status": task.status.value,
            "subject_text": task.subject_text,
            "summary": task.summary_fields,
            "content_hash": task.content_hash,
            "artifact_id": task.artifact_id,
            "input_digest": task.input_digest,
            "provenance": task.provenance.to_dict(),
            "created_at": format_ts(task.created_at),
            "decided_at": format_ts(task.decided_at) if task.decided_at else None,
            "reviewer_id": task.reviewer_id,
            "corrected_text": task.corrected_text,
            "reject_reason": task.reject_reason,
        }

    def list_tasks(self, status: str | None = None) -> list:
        if status is not None:
            try:
                wanted = ReviewStatus(status)
            except ValueError:
                raise ValidationFailed("unknown task status", status=status)
            tasks = self.tasks.by_status(wanted)
        else:
            tasks = self.tasks.all()
        tasks.sort(key=lambda t: (t.created_at, t.task_id))
        return [self._task_dict(t) for t in tasks]

    def get_task(self, task_id: str) -> dict:
        task = self.tasks.get(task_id)
        if task is None:
            raise NotFound("no such review task", task_id=task_id)
        return self._task_dict(task)

    # --- governance ----------------------------------------------------------------

    def decide(self, task_id: str, outcome: str, reviewer_id: str,
               corrected_text: str | None = None, reject_reason: str | None = None) -> dict:
        if not reviewer_id or not reviewer_id.strip():
            raise ValidationFailed("reviewer_id is required")
        try:
            outcome_value = DecisionOutcome(outcome)
        except ValueError:
            raise ValidationFailed("unknown outcome", outcome=outcome)
        return self.orchestrator.decide(ReviewDecision(
            task_id=task_id,
            outcome=outcome_value,
            reviewer_id=reviewer_id.strip(),
            corrected_text=corrected_text,
            reject_reason=reject_reason,
        ))

    def expire_stale(self, older_than_days: float | None = None) -> int:
        days = self.config.expire_after_days if older_than_days is None else older_than_days
        return self.orchestrator.expire_stale(days * 86400.0)

    def audit_stats(self) -> dict:
        stats = self.orchestrator.stats()
        stats["golden_size"] = self.golden.size()
        stats["audit_records"] = len(self.audit)
        return stats

    def verify_audit(self) -> dict:
        ok, first_bad = self.audit.verify()
        return {"ok": ok, "first_bad_seq": first_bad, "records": len(self.audit)}

    def requeue_encounter(self, encounter_id: str) -> dict:
        encounter = self.lifecycle.require(encounter_id)
        if encounter.phase is not Phase.QUARANTINED:
            raise IllegalTransition(
                "only quarantined encounters can be requeued",
                phase=encounter.phase.value,
            )
        event_id = self.publisher.publish(
            "operator.requeued", encounter.trace_id,
            {"encounter_id": encounter_id},
        )
        return {"encounter_id": encounter_id, "event_id": event_id}

    # --- agent lifecycle -------------------------------------------------------------

    def submit_manifest(self, agent_id: str, model_id: str, prompt_template: str,
                        policies, output_schema, expected_latest: int | None = None) -> dict:
        specs = tuple(
            spec if isinstance(spec, FieldSpec)
            else FieldSpec(spec["name"], spec["type"], spec.get("required", True))
            for spec in output_schema
        )
        policies = tuple(policies)
        draft = AgentManifest(
            agent_id=agent_id,
            version=0,
            model_id=model_id,
            prompt_template=prompt_template,
            policies=policies,
            output_schema=specs,
            created_at=self.clock.now(),
            content_hash=AgentManifest.compute_hash(
                agent_id, model_id, prompt_template, policies, specs
            ),
        )
        report = run_checks(draft, self.eval_provider, self.scanner)
        if not report.passed:
            raise ChecksFailed(
                "manifest failed pre-registration checks",
                report=report,
                failing=[r.name for r in report.failing()],
            )
        manifest, created = self.registry.submit(
            agent_id, model_id, prompt_template, policies, specs,
            expected_latest=expected_latest,
        )
        return {
            "agent_id": manifest.agent_id,
            "version": manifest.version,
            "created": created,
            "content_hash": manifest.content_hash,
            "checks": report.to_dict(),
        }

    def get_manifest(self, agent_id: str, version: int | None = None) -> dict:
        return self.registry.get(agent_id, version).to_dict()

    def stage_candidate(self, agent_id: str, version: int) -> dict:
        return self.rollouts.stage_candidate(agent_id, version).to_dict()

    def promote(self, agent_id: str, to_stage: str | None = None) -> dict:
        return self.rollouts.promote(agent_id, to_stage)

    def rollback(self, agent_id: str, reason: str = "manual") -> dict:
        return self.rollouts.rollback(agent_id, reason)

    def rollout_states(self) -> dict:
        return self.rollouts.states()

    def eval_agent(self, agent_id: str, version: int | None = None) -> dict:
        manifest = self.registry.get(agent_id, version)
        result = offline_eval(
            manifest, self.eval_provider, self.golden.all(),
            self.config.f1_threshold, clock=self.clock,
        )
        self.publisher.publish("eval.recorded", f"eval:{agent_id}", result.to_payload())
        return {
            "agent_id": result.agent_id,
            "version": result.version,
            "score": result.score,
            "total": result.total,
            "passing": result.passing,
            "results": [
                {"source_task_id": r.source_task_id, "ok": r.ok, "detail": r.detail}
                for r in result.results
            ],
        }

    # --- observability -----------------------------------------------------------------

    def replay(self, trace_id: str) -> list:
        return [json.loads(event.to_line()) for event in self.bus.replay(trace_id)]

    def boundary_report(self) -> dict:
        return {
            "requests": self.provider.requests_seen,
            "findings": len(self.provider.findings),
        }

    def metrics_snapshot(self) -> dict:
        snapshot = self.metrics.snapshot()
        snapshot["model_boundary"] = self.boundary_report()
        snapshot["intent_cache"] = {
            "hits": self.intent_classifier.hits,
            "misses": self.intent_classifier.misses,
            "hit_rate": self.intent_classifier.hit_rate,
        }
        snapshot["dead_letters"] = len(self.bus.dead_letters())
        return snapshot

    # --- lifecycle ----------------------------------------------------------------------

    def drain(self, timeout: float = 30.0) -> bool:
        return self.bus.drain(timeout=timeout)

    def close(self, drain: bool = True) -> None:
        self.bus.shutdown(drain=drain)
        close_log = getattr(self.bus.log, "close", None)
        if close_log is not None:
            close_log()
