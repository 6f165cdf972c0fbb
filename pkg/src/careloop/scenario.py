"""Scripted end-to-end scenarios: a YAML step list driven through the full
application, with an expectation block checked against the resulting stats.

The runner drains the bus after every call, so a seeded scenario produces a
byte-identical event log on every run.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import yaml

from .application import Application
from .errors import ScenarioError
from .infra import AppConfig
from .serialization import sha256_hex

DEFAULT_OPENING = "what should i do about my headache"
DEFAULT_ANSWERS = ("headache", "3 days", "5", "ibuprofen", "none")
DEFAULT_NOTES = "clinician reviewed the case, vitals within normal range"
DEFAULT_CORRECTION = "reviewed by the medical team; plan adjusted to rest and hydration"
DEFAULT_REJECT_REASON = "draft is inconsistent with the consult notes"

_STEP_KINDS = {
    "ingest", "answer", "consult", "decide", "requeue", "provider_script",
    "advance_time", "expire_stale", "batch_encounters",
}


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int | None
    config: dict
    steps: tuple
    expect: dict

    @classmethod
    def from_mapping(cls, raw: dict) -> "Scenario":
        if not isinstance(raw, dict):
            raise ScenarioError("scenario must be a mapping")
        name = raw.get("name")
        if not isinstance(name, str) or not name:
            raise ScenarioError("scenario needs a non-empty name")
        seed = raw.get("seed")
        if seed is not None and not isinstance(seed, int):
            raise ScenarioError("seed must be an integer", seed=seed)
        config = raw.get("config") or {}
        if not isinstance(config, dict):
            raise ScenarioError("config must be a mapping")
        steps = raw.get("steps")
        if not isinstance(steps, list) or not steps:
            raise ScenarioError("scenario needs a non-empty steps list")
        for index, step in enumerate(steps):
            if not isinstance(step, dict) or len(step) != 1:
                raise ScenarioError("each step is a single-key mapping", step=index)
            kind = next(iter(step))
            if kind not in _STEP_KINDS:
                raise ScenarioError("unknown step kind", step=index, kind=kind)
            if not isinstance(step[kind], dict):
                raise ScenarioError("step body must be a mapping", step=index, kind=kind)
        expect = raw.get("expect") or {}
        if not isinstance(expect, dict):
            raise ScenarioError("expect must be a mapping")
        return cls(
            name=name,
            seed=seed,
            config=dict(config),
            steps=tuple((next(iter(s)), dict(s[next(iter(s))])) for s in steps),
            expect=dict(expect),
        )


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"unparseable scenario file: {exc}")
    return Scenario.from_mapping(raw)


def _build_config(scenario: Scenario) -> AppConfig:
    base = AppConfig(storage="memory", seed=scenario.seed)
    known = {f.name for f in dataclasses.fields(AppConfig)}
    unknown = set(scenario.config) - known
    if unknown:
        raise ScenarioError("unknown config keys", keys=sorted(unknown))
    return dataclasses.replace(base, **scenario.config)


class ScenarioRunner:
    def __init__(self, scenario: Scenario, app: Application | None = None, *,
                 publish_duplication: int = 1, delivery_duplication: int = 1):
        self.scenario = scenario
        if app is None:
            app = Application(
                _build_config(scenario),
                publish_duplication=publish_duplication,
                delivery_duplication=delivery_duplication,
            )
            self._owns_app = True
        else:
            self._owns_app = False
        self.app = app
        self.refs: dict[str, str] = {}

    # --- execution --------------------------------------------------------------

    def run(self) -> dict:
        for index, (kind, spec) in enumerate(self.scenario.steps):
            try:
                getattr(self, f"_step_{kind}")(spec)
            except ScenarioError:
                raise
            except Exception as exc:
                raise ScenarioError(
                    f"step failed: {exc}", step=index, kind=kind
                ) from exc
        self._drain()
        return self.report()

    def close(self) -> None:
        if self._owns_app:
            self.app.close()

    def _drain(self) -> None:
        if not self.app.drain(timeout=30.0):
            raise ScenarioError("bus did not drain within 30s")

    def _encounter(self, spec: dict) -> str:
        ref = spec.get("ref")
        if ref is None or ref not in self.refs:
            raise ScenarioError("step references an unknown encounter", ref=ref)
        return self.refs[ref]

    # --- steps --------------------------------------------------------------------

    def _step_ingest(self, spec: dict) -> None:
        result = self.app.ingest_message(
            spec.get("patient", "anonymous"),
            spec.get("text", DEFAULT_OPENING),
            channel=spec.get("channel", "text"),
        )
        if "ref" in spec:
            self.refs[spec["ref"]] = result["encounter_id"]
        self._drain()

    def _step_answer(self, spec: dict) -> None:
        self.app.ingest_message(
            None,
            spec["text"],
            channel=spec.get("channel", "text"),
            encounter_id=self._encounter(spec),
        )
        self._drain()

    def _step_consult(self, spec: dict) -> None:
        self.app.attach_consult_notes(
            self._encounter(spec), spec.get("notes", DEFAULT_NOTES)
        )
        self._drain()

    def _step_decide(self, spec: dict) -> None:
        self._decide_encounter(
            self._encounter(spec),
            spec.get("outcome", "approve"),
            spec.get("reviewer", "reviewer-1"),
            spec,
        )
        self._drain()

    def _step_requeue(self, spec: dict) -> None:
        self.app.requeue_encounter(self._encounter(spec))
        self._drain()

    def _step_provider_script(self, spec: dict) -> None:
        self.app.mock.script(spec["scenario"], times=spec.get("times", 1))

    def _step_advance_time(self, spec: dict) -> None:
        try:
            self.app.clock.advance(float(spec.get("seconds", 0)))
        except NotImplementedError:
            raise ScenarioError("advance_time needs a seeded scenario clock")

    def _step_expire_stale(self, spec: dict) -> None:
        self.app.expire_stale(spec.get("older_than_days"))
        self._drain()

    def _step_batch_encounters(self, spec: dict) -> None:
        count = int(spec.get("count", 1))
        decision = spec.get("decision", "none")
        prefix = spec.get("prefix", "patient")
        reviewer = spec.get("reviewer", "reviewer-1")
        answers = tuple(spec.get("answers", DEFAULT_ANSWERS))
        for i in range(count):
            result = self.app.ingest_message(
                f"{prefix}-{i:04d}", spec.get("text", DEFAULT_OPENING)
            )
            self._drain()
            encounter_id = result["encounter_id"]
            for answer in answers:
                self.app.ingest_message(None, str(answer), encounter_id=encounter_id)
                self._drain()
            self.app.attach_consult_notes(encounter_id, spec.get("notes", DEFAULT_NOTES))
            self._drain()
            if decision != "none":
                self._decide_encounter(encounter_id, decision, reviewer, spec)
                self._drain()

    def _decide_encounter(self, encounter_id: str, outcome: str, reviewer: str,
                          spec: dict) -> None:
        pending = [
            t for t in self.app.list_tasks(status="pending")
            if t["encounter_id"] == encounter_id
        ]
        if not pending:
            raise ScenarioError(
                "no pending review task for encounter", encounter_id=encounter_id
            )
        corrected = spec.get("corrected_text", DEFAULT_CORRECTION)
        reason = spec.get("reject_reason", DEFAULT_REJECT_REASON)
        self.app.decide(
            pending[0]["task_id"],
            outcome,
            reviewer,
            corrected_text=corrected if outcome == "correct" else None,
            reject_reason=reason if outcome == "reject" else None,
        )

    # --- reporting -------------------------------------------------------------------

    def report(self) -> dict:
        stats = self.app.audit_stats()
        verification = self.app.verify_audit()
        log_lines = [event.to_line() for event in self.app.bus.log.read_all()]
        report = {
            "name": self.scenario.name,
            "stats": stats,
            "audit_ok": verification["ok"],
            "events_total": len(log_lines),
            "log_digest": sha256_hex("\n".join(log_lines)),
            "boundary": self.app.boundary_report(),
        }
        mismatches = []
        for key, expected in self.scenario.expect.items():
            actual = report["audit_ok"] if key == "audit_ok" else stats.get(key)
            if actual != expected:
                mismatches.append({"key": key, "expected": expected, "actual": actual})
        report["mismatches"] = mismatches
        report["expect_ok"] = not mismatches
        return report


def run_scenario_file(path: str, *, publish_duplication: int = 1,
                      delivery_duplication: int = 1, keep_app: bool = False):
    """Convenience wrapper: returns (report, runner); the runner is closed
    unless keep_app is set."""
    runner = ScenarioRunner(
        load_scenario(path),
        publish_duplication=publish_duplication,
        delivery_duplication=delivery_duplication,
    )
    try:
        report = runner.run()
    finally:
        if not keep_app:
            runner.close()
    return report, runner
