"""Agent lifecycle: manifests, checks, offline eval, rollouts, drift, feedback."""

import hashlib
import json

import pytest

from careloop.agents.provider import (
    DEFERRAL_TEXT,
    FieldSpec,
    MockModelProvider,
    ModelResponse,
)
from careloop.errors import (
    DuplicateTaskFeedback,
    EmptyGoldenSet,
    EmptyWindow,
    EvalGateFailed,
    IllegalStageJump,
    InsufficientBaseline,
    NotFound,
    ProviderError,
    VersionConflict,
)
from careloop.governance.audit import AuditLog
from careloop.governance.review import GoldenExample
from careloop.infra import MemoryGoldenStore, RegexPiiScanner
from careloop.mlops.checks import PROBE_CONTEXT, run_checks
from careloop.mlops.drift import detect_label_drift, detect_numeric_drift
from careloop.mlops.evaluate import offline_eval, token_f1
from careloop.mlops.feedback import FeedbackLoop
from careloop.mlops.manifest import AgentManifest, ManifestRegistry
from careloop.mlops.rollout import RolloutManager, Stage, canary_bucket
from careloop.runtime import SimulatedClock
from careloop.serialization import canonical_json, sha256_hex

from helpers import drive_to_review, make_app

SCHEMA = (
    FieldSpec("diagnosis", "text"),
    FieldSpec("findings", "list-of-text"),
    FieldSpec("plan", "text"),
    FieldSpec("codes", "list-of-text"),
)

TEMPLATE = "Summarize the encounter.\n\n{{context}}\n\nPolicies: {{policies}}"

POLICIES = ("require_diagnosis_field", "defer_on_medication_dosage")


class StubPublisher:
    def __init__(self):
        self.events = []
        self._n = 0

    def publish(self, event_type, trace_id, payload):
        self._n += 1
        self.events.append((event_type, trace_id, payload))
        return f"ev-{self._n}"


def make_registry(dir_path=None):
    return ManifestRegistry(SimulatedClock(), StubPublisher(), dir_path)


def submit(registry, template=TEMPLATE, agent_id="post_agent", **kwargs):
    return registry.submit(
        agent_id, "mock-clinical-v1", template, POLICIES, SCHEMA, **kwargs
    )


# ----------------------------------------------------------------- registry

def test_identical_content_never_burns_a_version():
    registry = make_registry()
    first, created = submit(registry)
    assert (first.version, created) == (1, True)

    again, created = submit(registry)
    assert not created
    assert again is first  # same version, same created_at

    second, created = submit(registry, template=TEMPLATE + "\nBe concise.")
    assert (second.version, created) == (2, True)

    # resubmitting v1's content later still maps back to version 1
    old, created = submit(registry)
    assert (old.version, created) == (1, False)
    assert registry.versions("post_agent") == [1, 2]


def test_content_hash_ignores_version_and_created_at():
    registry = make_registry()
    v1, _ = submit(registry)
    v2, _ = submit(registry, template=TEMPLATE + " x")
    assert v1.content_hash != v2.content_hash
    assert v1.content_hash == AgentManifest.compute_hash(
        "post_agent", "mock-clinical-v1", TEMPLATE, POLICIES, SCHEMA
    )


def test_expected_latest_guards_concurrent_submissions():
    registry = make_registry()
    submit(registry)
    with pytest.raises(VersionConflict):
        submit(registry, template="changed {{context}}", expected_latest=0)
    manifest, created = submit(registry, template="changed {{context}}",
                               expected_latest=1)
    assert created and manifest.version == 2


def test_registry_lookup_errors_and_persistence(tmp_path):
    registry = make_registry(str(tmp_path))
    with pytest.raises(NotFound):
        registry.get("post_agent")
    submit(registry)
    submit(registry, template=TEMPLATE + " v2")
    with pytest.raises(NotFound):
        registry.get("post_agent", version=9)

    reloaded = make_registry(str(tmp_path))
    assert reloaded.versions("post_agent") == [1, 2]
    assert reloaded.get("post_agent").version == 2
    assert reloaded.get("post_agent", 1).to_dict() == registry.get("post_agent", 1).to_dict()


def test_render_instruction_substitutes_both_placeholders():
    registry = make_registry()
    manifest, _ = submit(registry)
    instruction = manifest.render_instruction(["line one", "line two"])
    assert "line one\nline two" in instruction
    assert "require_diagnosis_field, defer_on_medication_dosage" in instruction
    assert "{{" not in instruction

    request = manifest.build_request(["line one"])
    assert request.agent_version == 1
    assert request.policies == POLICIES
    assert request.output_schema == SCHEMA


# ------------------------------------------------------------------- checks

def manifest_with(template=TEMPLATE, policies=POLICIES, schema=SCHEMA):
    manifest, _ = ManifestRegistry(SimulatedClock()).submit(
        "post_agent", "mock-clinical-v1", template, policies, schema
    )
    return manifest


def by_name(report):
    return {r.name: r for r in report.results}


def test_all_four_checks_pass_on_a_sound_manifest():
    report = run_checks(manifest_with(), MockModelProvider(seed=3), RegexPiiScanner())
    assert report.passed
    assert [r.name for r in report.results] == [
        "lint", "schema_validation", "red_team", "pii_scan",
    ]
    assert report.failing() == []


@pytest.mark.parametrize("template,fragment", [
    ("   ", "empty prompt template"),
    ("no placeholders at all", "never injects"),
    ("{{context}} and {{instruction}}", "unknown placeholders: instruction"),
    ("{{policies}} only", "never injects"),
])
def test_lint_rejects_bad_templates(template, fragment):
    report = run_checks(
        manifest_with(template=template), MockModelProvider(seed=3), RegexPiiScanner()
    )
    lint = by_name(report)["lint"]
    assert not lint.ok and fragment in lint.detail
    assert not report.passed


def test_schema_check_enforces_the_diagnosis_policy_coupling():
    no_diagnosis = (
        FieldSpec("findings", "list-of-text"),
        FieldSpec("plan", "text"),
    )
    report = run_checks(
        manifest_with(schema=no_diagnosis), MockModelProvider(seed=3), RegexPiiScanner()
    )
    result = by_name(report)["schema_validation"]
    assert not result.ok and "require_diagnosis_field" in result.detail

    optional = (FieldSpec("diagnosis", "text", required=False),) + SCHEMA[1:]
    report = run_checks(
        manifest_with(schema=optional), MockModelProvider(seed=3), RegexPiiScanner()
    )
    assert not by_name(report)["schema_validation"].ok


def test_schema_check_probes_the_live_provider():
    provider = MockModelProvider(seed=3)
    provider.script("malformed")
    report = run_checks(manifest_with(), provider, RegexPiiScanner())
    result = by_name(report)["schema_validation"]
    assert not result.ok and "required field missing" in result.detail

    dead = MockModelProvider(seed=3)
    dead.script("timeout", times=5)
    report = run_checks(manifest_with(), dead, RegexPiiScanner())
    assert not by_name(report)["schema_validation"].ok


class NeverDefers:
    def complete(self, request):
        return ModelResponse(
            fields={"diagnosis": "x", "findings": ["y"], "plan": "z", "codes": ["R51"]},
            model_id=request.model_id,
        )


class AlwaysDefers:
    def complete(self, request):
        return ModelResponse(
            fields={"diagnosis": DEFERRAL_TEXT, "findings": [], "plan": DEFERRAL_TEXT,
                    "codes": []},
            model_id=request.model_id,
        )


def test_red_team_catches_both_failure_directions():
    report = run_checks(manifest_with(), NeverDefers(), RegexPiiScanner())
    red = by_name(report)["red_team"]
    assert not red.ok
    assert "defer_on_medication_dosage: answered instead of deferring" in red.detail

    report = run_checks(manifest_with(), AlwaysDefers(), RegexPiiScanner())
    red = by_name(report)["red_team"]
    assert not red.ok and "benign input was deferred" in red.detail


def test_red_team_passes_when_deferrals_line_up():
    report = run_checks(manifest_with(), MockModelProvider(seed=3), RegexPiiScanner())
    red = by_name(report)["red_team"]
    assert red.ok and "1 trigger probes" in red.detail


def test_pii_check_requires_a_working_scanner_and_clean_template():
    report = run_checks(manifest_with(), MockModelProvider(seed=3), None)
    assert not by_name(report)["pii_scan"].ok

    leaky = manifest_with(template="ask ana.souza@example.com about {{context}}")
    report = run_checks(leaky, MockModelProvider(seed=3), RegexPiiScanner())
    result = by_name(report)["pii_scan"]
    assert not result.ok and "leaks" in result.detail


def test_check_report_serializes_for_api_responses():
    report = run_checks(manifest_with(), MockModelProvider(seed=3), RegexPiiScanner())
    raw = report.to_dict()
    assert raw["passed"] is True
    assert len(raw["results"]) == 4
    json.dumps(raw)


# ----------------------------------------------------------------- token f1

@pytest.mark.parametrize("expected,actual,score", [
    ("a b c d e f g", "a b c d e f h", 6 / 7),
    ("a a b", "a b b", 2 / 3),
    ("same tokens here", "same tokens here", 1.0),
    ("Hello World", "hello world", 1.0),
    ("left only", "", 0.0),
    ("", "right only", 0.0),
    ("", "", 1.0),
    ("alpha beta", "gamma delta", 0.0),
])
def test_token_f1_oracles(expected, actual, score):
    assert token_f1(expected, actual) == pytest.approx(score, abs=1e-9)


# ------------------------------------------------------------- offline eval

def golden_example(manifest, provider, extra_line, task_id, clock,
                   corrected_fields=None):
    context = list(PROBE_CONTEXT) + [f"patient_message: {extra_line}"]
    if corrected_fields is None:
        corrected_fields = provider.complete(manifest.build_request(context)).fields
    return GoldenExample(
        input_digest=sha256_hex(canonical_json(context)),
        ai_output={"text": "draft", "fields": dict(corrected_fields)},
        corrected_output={"fields": dict(corrected_fields)},
        reviewer_id="dr-a",
        source_task_id=task_id,
        created_at=clock.now(),
        eval_request={"context": context, "policies": list(manifest.policies)},
    )


def test_offline_eval_scores_exact_fractions():
    clock = SimulatedClock()
    manifest = manifest_with()
    provider = MockModelProvider(seed=11)
    examples = [
        golden_example(manifest, provider, f"note {i}", f"task-{i}", clock)
        for i in range(4)
    ]
    perfect = offline_eval(manifest, provider, examples, clock=clock)
    assert perfect.score == 1.0
    assert (perfect.total, perfect.passing) == (4, 4)

    tampered = examples[:3] + [
        golden_example(manifest, provider, "note 3", "task-3x", clock,
                       corrected_fields={"codes": ["Z99.9"]})
    ]
    result = offline_eval(manifest, provider, tampered, clock=clock)
    assert result.score == 0.75  # exactly 3 of 4
    failing = [r for r in result.results if not r.ok]
    assert len(failing) == 1
    assert failing[0].source_task_id == "task-3x"
    assert "codes" in failing[0].detail


def test_offline_eval_refuses_an_empty_golden_set():
    with pytest.raises(EmptyGoldenSet):
        offline_eval(manifest_with(), MockModelProvider(), [], clock=SimulatedClock())


def test_offline_eval_reports_missing_fields():
    clock = SimulatedClock()
    manifest = manifest_with()
    provider = MockModelProvider(seed=11)
    example = golden_example(
        manifest, provider, "note", "task-1", clock,
        corrected_fields={"prognosis": "good"},
    )
    result = offline_eval(manifest, provider, [example], clock=clock)
    assert result.score == 0.0
    assert "prognosis: missing from response" in result.results[0].detail


def test_offline_eval_text_mode_compares_rendered_summaries():
    from careloop.domain import AgentRef, ClinicalSummary, render_summary

    clock = SimulatedClock()
    manifest = manifest_with()
    provider = MockModelProvider(seed=11)
    context = list(PROBE_CONTEXT)
    fields = provider.complete(manifest.build_request(context)).fields
    rendered = render_summary(ClinicalSummary.create(
        diagnosis=fields["diagnosis"], findings=fields["findings"],
        plan=fields["plan"], codes=fields["codes"],
        produced_by=AgentRef(manifest.agent_id, manifest.version),
        model_id=manifest.model_id,
    ))

    def text_example(text, task_id):
        return GoldenExample(
            input_digest="d" * 64, ai_output={"text": "draft"},
            corrected_output={"text": text}, reviewer_id="dr-a",
            source_task_id=task_id, created_at=clock.now(),
            eval_request={"context": context, "policies": []},
        )

    matching = offline_eval(manifest, provider, [text_example(rendered, "t-1")],
                            clock=clock)
    assert matching.score == 1.0

    divergent = offline_eval(
        manifest, provider,
        [text_example("entirely unrelated words appear nowhere", "t-2")],
        clock=clock,
    )
    assert divergent.score == 0.0


# ----------------------------------------------------------------- rollouts

def make_rollouts(tmp_path=None, golden=None, **kwargs):
    clock = SimulatedClock()
    registry = ManifestRegistry(clock)
    submit(registry)
    submit(registry, template=TEMPLATE + "\nPrefer short sentences.")
    publisher = StubPublisher()
    audit = AuditLog(clock)
    manager = RolloutManager(
        registry, golden if golden is not None else MemoryGoldenStore(),
        MockModelProvider(seed=5), audit, publisher, clock,
        path=str(tmp_path / "rollouts.json") if tmp_path else None,
        **kwargs,
    )
    manager.activate("post_agent", 1)
    return manager, publisher, audit


def test_ladder_walks_one_rung_at_a_time():
    manager, publisher, _ = make_rollouts()
    state = manager.stage_candidate("post_agent", 2)
    assert (state.stage, state.traffic_pct) == (Stage.SHADOW, 0)

    step = manager.promote("post_agent")
    assert (step["stage"], step["traffic_pct"]) == ("canary", 10)
    assert step["gate_waived"] is True and step["eval"] is None

    step = manager.promote("post_agent")
    assert (step["stage"], step["traffic_pct"]) == ("gradual", 50)

    step = manager.promote("post_agent")
    assert (step["stage"], step["traffic_pct"]) == ("full", 100)
    state = manager.state("post_agent")
    assert state.active_version == 2
    assert state.candidate_version is None and state.stage is None

    staged = [e for e in publisher.events if e[0] == "rollout.staged"]
    assert [e[2]["stage"] for e in staged] == ["shadow", "canary", "gradual", "full"]


def test_stage_jumps_and_bad_candidates_are_refused():
    manager, _, _ = make_rollouts()
    with pytest.raises(IllegalStageJump):
        manager.promote("post_agent")  # nothing staged
    with pytest.raises(VersionConflict):
        manager.stage_candidate("post_agent", 1)  # already active
    with pytest.raises(NotFound):
        manager.stage_candidate("post_agent", 9)
    with pytest.raises(NotFound):
        manager.route("ghost_agent", "tr-1")

    manager.stage_candidate("post_agent", 2)
    manager.stage_candidate("post_agent", 2)  # idempotent while in shadow
    with pytest.raises(IllegalStageJump):
        manager.promote("post_agent", to_stage="gradual")  # skips canary
    assert manager.state("post_agent").stage is Stage.SHADOW


def test_shadow_routes_active_and_exposes_the_shadow_version():
    manager, _, _ = make_rollouts()
    manager.stage_candidate("post_agent", 2)
    route = manager.route("post_agent", "tr-anything")
    assert route.serving_version == 1
    assert route.shadow_version == 2
    assert route.served_candidate is False


def test_canary_assignment_matches_recomputed_buckets():
    manager, _, _ = make_rollouts()
    manager.stage_candidate("post_agent", 2)
    manager.promote("post_agent")  # canary at 10%
    served = 0
    for i in range(200):
        trace_id = f"tr-{i}"
        digest = hashlib.sha256(trace_id.encode()).hexdigest()
        expected = (int(digest, 16) % 100) < 10
        route = manager.route("post_agent", trace_id)
        assert route.served_candidate is expected
        assert route.serving_version == (2 if expected else 1)
        assert canary_bucket(trace_id) == int(digest, 16) % 100
        served += route.served_candidate
    assert 0 < served < 200
    # assignment is sticky per trace
    assert manager.route("post_agent", "tr-0") == manager.route("post_agent", "tr-0")


def test_eval_gate_blocks_and_admits_candidates():
    clock = SimulatedClock()
    registry = ManifestRegistry(clock)
    v1, _ = submit(registry)
    v2, _ = submit(registry, template=TEMPLATE + "\nBe brief.")
    golden = MemoryGoldenStore()
    provider = MockModelProvider(seed=5)
    publisher = StubPublisher()
    manager = RolloutManager(registry, golden, provider, AuditLog(clock),
                             publisher, clock)
    manager.activate("post_agent", 1)

    # golden answers that no candidate can reproduce
    golden.append(golden_example(v2, provider, "note", "task-bad", clock,
                                 corrected_fields={"codes": ["Z99.9"]}))
    manager.stage_candidate("post_agent", 2)
    with pytest.raises(EvalGateFailed):
        manager.promote("post_agent")
    state = manager.state("post_agent")
    assert state.stage is Stage.SHADOW and state.candidate_version == 2

    # golden rebuilt from the candidate's own deterministic outputs
    golden._examples.clear()
    golden._task_ids.clear()
    golden.append(golden_example(v2, provider, "note", "task-good", clock))
    step = manager.promote("post_agent")
    assert step["stage"] == "canary"
    assert step["gate_waived"] is False
    assert step["eval"]["score"] == 1.0
    evals = [e for e in publisher.events if e[0] == "eval.recorded"]
    assert len(evals) == 2  # failed gate attempt + passing one


def test_guardrail_rolls_back_at_the_breach_threshold():
    manager, publisher, audit = make_rollouts(window=5, breach_threshold=3)
    manager.stage_candidate("post_agent", 2)
    manager.promote("post_agent")  # canary

    assert manager.record_outcome("post_agent", 2, False) is False
    assert manager.record_outcome("post_agent", 2, True) is False
    assert manager.record_outcome("post_agent", 2, False) is False
    state = manager.state("post_agent")
    assert state.stage is Stage.CANARY  # 2 failures, threshold is 3

    assert manager.record_outcome("post_agent", 2, False) is True
    state = manager.state("post_agent")
    assert state.candidate_version is None and state.stage is None
    assert state.active_version == 1
    assert len(state.window) == 0

    rolled = [e for e in publisher.events if e[0] == "rollout.rolled_back"]
    assert len(rolled) == 1
    assert rolled[0][2]["reason"] == "guardrail_breach"
    assert rolled[0][2]["candidate_version"] == 2
    assert rolled[0][2]["restored_version"] == 1
    records = [r for r in audit.records() if r.action == "RolledBack"]
    assert len(records) == 1 and records[0].trace_id == "rollout:post_agent"

    # traffic immediately returns to the active version
    assert all(
        not manager.route("post_agent", f"tr-{i}").served_candidate
        for i in range(50)
    )


def test_guardrail_ignores_irrelevant_outcomes():
    manager, _, _ = make_rollouts(window=5, breach_threshold=3)
    manager.stage_candidate("post_agent", 2)
    # shadow stage: outcomes do not count
    for _ in range(5):
        assert manager.record_outcome("post_agent", 2, False) is False
    assert manager.state("post_agent").stage is Stage.SHADOW

    manager.promote("post_agent")
    # outcomes for the active (non-candidate) version do not count either
    for _ in range(5):
        assert manager.record_outcome("post_agent", 1, False) is False
    assert manager.state("post_agent").stage is Stage.CANARY
    assert len(manager.state("post_agent").window) == 0


def test_manual_rollback_and_rollback_without_candidate():
    manager, _, _ = make_rollouts()
    manager.stage_candidate("post_agent", 2)
    detail = manager.rollback("post_agent", reason="operator call")
    assert detail["reason"] == "operator call"
    assert manager.state("post_agent").candidate_version is None
    with pytest.raises(NotFound):
        manager.rollback("post_agent")


def test_rollout_state_survives_restart(tmp_path):
    clock = SimulatedClock()
    registry = ManifestRegistry(clock)
    submit(registry)
    submit(registry, template=TEMPLATE + " v2")
    path = str(tmp_path / "rollouts.json")
    manager = RolloutManager(registry, MemoryGoldenStore(), MockModelProvider(),
                             None, None, clock, path=path)
    manager.activate("post_agent", 1)
    manager.stage_candidate("post_agent", 2)
    manager.promote("post_agent")
    manager.record_outcome("post_agent", 2, False)

    reborn = RolloutManager(registry, MemoryGoldenStore(), MockModelProvider(),
                            None, None, clock, path=path)
    state = reborn.state("post_agent")
    assert state.active_version == 1
    assert state.candidate_version == 2
    assert state.stage is Stage.CANARY
    assert list(state.window) == [False]


# -------------------------------------------------------------------- drift

def baseline_mean10_sd2():
    return [8.0, 12.0] * 15  # mean 10, population stdev 2, n=30


def test_numeric_drift_z_score_oracle():
    report = detect_numeric_drift(baseline_mean10_sd2(), [22.0] * 10)
    assert report.value == pytest.approx(6.0, abs=1e-12)
    assert report.drifted
    assert (report.baseline_n, report.current_n) == (30, 10)


def test_numeric_drift_threshold_is_strict():
    at_threshold = detect_numeric_drift(baseline_mean10_sd2(), [16.0] * 10)
    assert at_threshold.value == pytest.approx(3.0, abs=1e-12)
    assert not at_threshold.drifted

    below = detect_numeric_drift(baseline_mean10_sd2(), [4.0] * 10)
    assert below.value == pytest.approx(-3.0, abs=1e-12)
    assert not below.drifted

    past = detect_numeric_drift(baseline_mean10_sd2(), [2.0] * 10)
    assert past.value == pytest.approx(-4.0, abs=1e-12)
    assert past.drifted


def test_numeric_drift_handles_constant_baselines():
    flat = [5.0] * 30
    assert detect_numeric_drift(flat, [5.0, 5.0]).value == 0.0
    inflated = detect_numeric_drift(flat, [6.0])
    assert inflated.value == float("inf") and inflated.drifted


def test_drift_guards_baseline_and_window_sizes():
    with pytest.raises(InsufficientBaseline):
        detect_numeric_drift([1.0] * 29, [1.0])
    with pytest.raises(EmptyWindow):
        detect_numeric_drift([1.0] * 30, [])
    with pytest.raises(InsufficientBaseline):
        detect_label_drift(["a"] * 29, ["a"])
    with pytest.raises(EmptyWindow):
        detect_label_drift(["a"] * 30, [])


def test_label_drift_total_variation_oracle():
    disjoint = detect_label_drift(["a"] * 30, ["b"] * 10)
    assert disjoint.value == pytest.approx(1.0, abs=1e-12)
    assert disjoint.drifted

    half = detect_label_drift(["a"] * 15 + ["b"] * 15, ["a"] * 10)
    assert half.value == pytest.approx(0.5, abs=1e-12)
    assert not half.drifted  # strict threshold

    same = detect_label_drift(["a", "b"] * 15, ["a", "b"] * 5)
    assert same.value == pytest.approx(0.0, abs=1e-12)
    assert not same.drifted


# ----------------------------------------------------------------- feedback

def test_direct_ingest_rejects_duplicate_task_feedback():
    clock = SimulatedClock()
    golden = MemoryGoldenStore()
    loop = FeedbackLoop(None, golden, ManifestRegistry(clock),
                        MockModelProvider(), None, clock)
    manifest = manifest_with()
    example = golden_example(manifest, MockModelProvider(seed=5), "note",
                             "task-1", clock)
    loop.ingest(example)
    assert golden.size() == 1
    with pytest.raises(DuplicateTaskFeedback):
        loop.ingest(example)


def test_correction_triggers_a_recorded_reevaluation():
    app = make_app()
    try:
        _, task = drive_to_review(app)
        app.decide(task["task_id"], "correct", "dr-a",
                   corrected_text=task["subject_text"] + "\nAmended.")
        assert app.drain()
        evals = [e for e in app.bus.log.read_all() if e.event_type == "eval.recorded"]
        assert len(evals) == 1
        assert evals[0].trace_id == "eval:post_agent"
        assert evals[0].payload["agent_id"] == "post_agent"
        assert evals[0].payload["examples"] == 1
    finally:
        app.close(drain=False)


def test_approval_does_not_trigger_reevaluation():
    app = make_app()
    try:
        _, task = drive_to_review(app)
        app.decide(task["task_id"], "approve", "dr-a")
        assert app.drain()
        evals = [e for e in app.bus.log.read_all() if e.event_type == "eval.recorded"]
        assert evals == []
    finally:
        app.close(drain=False)


# ----------------------------------------- shadow serving through the stack

def test_shadow_candidate_generates_but_never_reaches_review():
    app = make_app()
    try:
        manifest = app.submit_manifest(
            "post_agent", "mock-clinical-v1",
            app.get_manifest("post_agent")["prompt_template"] + "\nKeep it short.",
            ("require_diagnosis_field", "defer_on_medication_dosage",
             "defer_on_self_harm", "refuse_pii_elicitation"),
            [s.to_dict() for s in SCHEMA],
        )
        assert manifest["version"] == 2
        app.stage_candidate("post_agent", 2)

        calls_before = app.mock.calls
        _, task = drive_to_review(app)
        assert app.mock.calls == calls_before + 2  # active + shadow generation

        assert len(app.list_tasks()) == 1
        assert task["provenance"]["manifest_version"] == 1
        kinds = {ref.kind for ref in app.artifacts._refs.values()}
        assert "shadow_output" in kinds
    finally:
        app.close(drain=False)
