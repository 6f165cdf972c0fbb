"""Scripted scenario runner: file validation, seeded determinism, storage
parity, expectation checking, and fault injection through the provider."""

from __future__ import annotations

from pathlib import Path

import pytest

from careloop.errors import ScenarioError
from careloop.scenario import ScenarioRunner, load_scenario, run_scenario_file

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

SINGLE_APPROVE = """\
name: single
seed: {seed}
steps:
  - ingest: {{ref: e1, patient: "patient-x", text: "what should i do about my headache"}}
  - answer: {{ref: e1, text: "headache"}}
  - answer: {{ref: e1, text: "2 days"}}
  - answer: {{ref: e1, text: "4"}}
  - answer: {{ref: e1, text: "none"}}
  - answer: {{ref: e1, text: "none"}}
  - consult: {{ref: e1}}
  - decide: {{ref: e1, outcome: approve, reviewer: dr-lima}}
expect:
  total_tasks: 1
  approved: 1
"""


def write_scenario(tmp_path, text, name="case.scenario"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def run_single(tmp_path, seed, **kwargs):
    path = write_scenario(tmp_path, SINGLE_APPROVE.format(seed=seed), f"s{seed}.scenario")
    return run_scenario_file(path, **kwargs)


# --- file validation ------------------------------------------------------------


@pytest.mark.parametrize(
    "text,message",
    [
        ("- 1\n- 2\n", "scenario must be a mapping"),
        ("seed: 1\nsteps:\n  - ingest: {}\n", "non-empty name"),
        ("name: ''\nsteps:\n  - ingest: {}\n", "non-empty name"),
        ("name: x\nseed: seven\nsteps:\n  - ingest: {}\n", "seed must be an integer"),
        ("name: x\nconfig: [1]\nsteps:\n  - ingest: {}\n", "config must be a mapping"),
        ("name: x\nsteps: []\n", "non-empty steps"),
        ("name: x\n", "non-empty steps"),
        ("name: x\nsteps:\n  - ingest: {}\n    answer: {}\n", "single-key mapping"),
        ("name: x\nsteps:\n  - teleport: {}\n", "unknown step kind"),
        ("name: x\nsteps:\n  - ingest: hello\n", "step body must be a mapping"),
        ("name: x\nsteps:\n  - ingest: {}\nexpect: [1]\n", "expect must be a mapping"),
    ],
)
def test_malformed_scenario_files_are_rejected(tmp_path, text, message):
    path = write_scenario(tmp_path, text)
    with pytest.raises(ScenarioError, match=message):
        load_scenario(path)


def test_unparseable_yaml_is_reported(tmp_path):
    path = write_scenario(tmp_path, "name: [unclosed\n")
    with pytest.raises(ScenarioError, match="unparseable scenario file"):
        load_scenario(path)


def test_unknown_config_keys_are_rejected(tmp_path):
    text = SINGLE_APPROVE.format(seed=1).replace(
        "seed: 1\n", "seed: 1\nconfig:\n  flux_capacitor: 3\n"
    )
    path = write_scenario(tmp_path, text)
    with pytest.raises(ScenarioError, match="unknown config keys") as exc:
        run_scenario_file(path)
    assert exc.value.detail["keys"] == ["flux_capacitor"]


def test_steps_referencing_unknown_encounters_fail(tmp_path):
    path = write_scenario(
        tmp_path,
        "name: x\nseed: 3\nsteps:\n"
        '  - answer: {ref: ghost, text: "hi"}\n',
    )
    with pytest.raises(ScenarioError, match="unknown encounter"):
        run_scenario_file(path)


def test_decide_without_a_pending_task_fails(tmp_path):
    # The questionnaire is still open, so no review task exists yet.
    path = write_scenario(
        tmp_path,
        "name: x\nseed: 3\nsteps:\n"
        '  - ingest: {ref: e1, text: "what should i do about my headache"}\n'
        "  - decide: {ref: e1, outcome: approve}\n",
    )
    with pytest.raises(ScenarioError, match="no pending review task"):
        run_scenario_file(path)


def test_advance_time_requires_a_seeded_clock(tmp_path):
    path = write_scenario(
        tmp_path,
        "name: x\nsteps:\n"
        '  - ingest: {ref: e1, text: "hello there"}\n'
        "  - advance_time: {seconds: 60}\n",
    )
    with pytest.raises(ScenarioError, match="seeded scenario clock"):
        run_scenario_file(path)


# --- determinism and storage parity ------------------------------------------------


def test_same_seed_reproduces_the_event_log_byte_for_byte(tmp_path):
    first, _ = run_single(tmp_path, 11)
    second, _ = run_single(tmp_path, 11)
    assert first["log_digest"] == second["log_digest"]
    assert first["events_total"] == second["events_total"]
    assert first["expect_ok"] and second["expect_ok"]


def test_different_seeds_diverge(tmp_path):
    first, _ = run_single(tmp_path, 11)
    second, _ = run_single(tmp_path, 12)
    assert first["log_digest"] != second["log_digest"]
    assert first["stats"] == second["stats"]


def test_file_storage_matches_memory_storage_stats(tmp_path):
    memory_report, _ = run_single(tmp_path, 9)
    text = SINGLE_APPROVE.format(seed=9).replace(
        "seed: 9\n",
        f"seed: 9\nconfig:\n  storage: file\n  data_dir: {tmp_path / 'data'}\n",
    )
    path = write_scenario(tmp_path, text, "file-mode.scenario")
    file_report, _ = run_scenario_file(path)
    assert file_report["stats"] == memory_report["stats"]
    assert file_report["audit_ok"] and memory_report["audit_ok"]
    assert (tmp_path / "data").is_dir()


# --- expectation checking ---------------------------------------------------------


def test_expect_mismatches_are_reported_not_raised(tmp_path):
    text = SINGLE_APPROVE.format(seed=5).replace("approved: 1", "approved: 3")
    path = write_scenario(tmp_path, text)
    report, _ = run_scenario_file(path)
    assert report["expect_ok"] is False
    assert {"key": "approved", "expected": 3, "actual": 1} in report["mismatches"]


def test_demo_scenario_meets_its_expectations():
    report, _ = run_scenario_file(str(SCENARIOS / "demo.scenario"))
    assert report["expect_ok"], report["mismatches"]
    assert report["audit_ok"] is True
    assert report["stats"]["total_tasks"] == 4
    assert report["stats"]["golden_size"] == 1
    assert report["boundary"]["findings"] == 0


def test_duplication_leaves_business_outcomes_unchanged():
    plain, _ = run_scenario_file(str(SCENARIOS / "demo.scenario"))
    noisy, _ = run_scenario_file(
        str(SCENARIOS / "demo.scenario"),
        publish_duplication=2,
        delivery_duplication=3,
    )
    assert noisy["stats"] == plain["stats"]
    assert noisy["audit_ok"] and noisy["expect_ok"]


# --- fault injection ---------------------------------------------------------------


def test_provider_timeout_yields_no_task_and_no_dead_letters(tmp_path):
    text = (
        "name: outage\nseed: 4\nsteps:\n"
        "  - provider_script: {scenario: timeout}\n"
        '  - ingest: {ref: e1, text: "what should i do about my headache"}\n'
        '  - answer: {ref: e1, text: "headache"}\n'
        '  - answer: {ref: e1, text: "2 days"}\n'
        '  - answer: {ref: e1, text: "4"}\n'
        '  - answer: {ref: e1, text: "none"}\n'
        '  - answer: {ref: e1, text: "none"}\n'
        "  - consult: {ref: e1}\n"
        "expect:\n  total_tasks: 0\n  pending: 0\n"
    )
    path = write_scenario(tmp_path, text)
    report, runner = run_scenario_file(path, keep_app=True)
    try:
        assert report["expect_ok"], report["mismatches"]
        assert runner.app.bus.dead_letters() == []
        failures = [
            e for e in runner.app.bus.log.read_all() if e.event_type == "agent.failed"
        ]
        assert len(failures) == 1
        assert failures[0].payload["reason"] == "provider_error"
    finally:
        runner.close()


def test_runner_reuses_a_caller_supplied_app(tmp_path):
    path = write_scenario(tmp_path, SINGLE_APPROVE.format(seed=2), "owned.scenario")
    scenario = load_scenario(path)
    outer = ScenarioRunner(scenario)
    try:
        inner = ScenarioRunner(scenario, app=outer.app)
        report = inner.run()
        assert report["expect_ok"]
        inner.close()
        # close() on a borrowed app is a no-op; the bus still accepts work
        assert outer.app.drain(timeout=5.0)
    finally:
        outer.close()
