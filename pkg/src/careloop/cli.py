"""Command line client: serve the HTTP API, replay scenarios, inspect the
audit trail, and drive agent lifecycle operations against a data directory."""

from __future__ import annotations

import json
import sys

import click
import yaml

from .application import Application
from .errors import WorkflowError
from .governance import verify_audit_file
from .infra import load_config
from .infra.eventlog import verify_event_log
from .scenario import load_scenario, ScenarioRunner


def _echo(payload) -> None:
    click.echo(json.dumps(payload, indent=2, ensure_ascii=False))


def _config(config_path, data_dir, seed, storage, port=None, host=None):
    overrides = {
        "data_dir": data_dir,
        "seed": seed,
        "storage": storage,
        "port": port,
        "host": host,
    }
    return load_config(config_path, overrides={k: v for k, v in overrides.items()})


def _common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="YAML config file.")(fn)
    fn = click.option("--data-dir", default=None, help="State directory.")(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="Seed for deterministic clock, ids and backoff.")(fn)
    fn = click.option("--storage", type=click.Choice(["file", "memory"]),
                      default=None)(fn)
    return fn


@click.group()
def main():
    """Clinical encounter workflow engine."""


@main.command()
@_common_options
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path, data_dir, seed, storage, host, port):
    """Run the HTTP API."""
    import uvicorn

    from .api import create_app

    config = _config(config_path, data_dir, seed, storage, port=port, host=host)
    application = Application(config)
    try:
        uvicorn.run(create_app(application), host=config.host, port=config.port,
                    log_level="warning")
    finally:
        application.close()


@main.command()
@click.argument("scenario_file", type=click.Path(exists=True))
@click.option("--publish-duplication", type=int, default=1,
              help="Publish every event N times (idempotency drill).")
@click.option("--delivery-duplication", type=int, default=1,
              help="Deliver every event N times per subscriber.")
def replay(scenario_file, publish_duplication, delivery_duplication):
    """Run a scenario file and check its expectations. Exits non-zero on any
    mismatch or on a broken audit chain."""
    runner = ScenarioRunner(
        load_scenario(scenario_file),
        publish_duplication=publish_duplication,
        delivery_duplication=delivery_duplication,
    )
    try:
        report = runner.run()
    finally:
        runner.close()
    _echo(report)
    if not report["expect_ok"] or not report["audit_ok"]:
        sys.exit(1)


@main.group()
def audit():
    """Audit trail operations."""


@audit.command("verify")
@_common_options
def audit_verify(config_path, data_dir, seed, storage):
    """Recompute both hash chains straight from the files on disk."""
    config = _config(config_path, data_dir, seed, storage)
    audit_ok, audit_bad = verify_audit_file(config.path("audit.log"))
    events_ok, events_bad = verify_event_log(config.path("events.log"))
    _echo({
        "audit": {"ok": audit_ok, "first_bad_seq": audit_bad},
        "events": {"ok": events_ok, "first_bad_line": events_bad},
    })
    if not (audit_ok and events_ok):
        sys.exit(1)


@audit.command("stats")
@_common_options
def audit_stats(config_path, data_dir, seed, storage):
    """Review throughput and decision mix, rebuilt from the durable state."""
    application = Application(_config(config_path, data_dir, seed, storage))
    try:
        _echo(application.audit_stats())
    finally:
        application.close()


@main.group()
def registry():
    """Agent manifest registry."""


@registry.command("submit")
@click.argument("manifest_file", type=click.Path(exists=True))
@_common_options
def registry_submit(manifest_file, config_path, data_dir, seed, storage):
    """Submit a manifest (YAML or JSON) through the pre-registration checks."""
    with open(manifest_file, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    application = Application(_config(config_path, data_dir, seed, storage))
    try:
        result = application.submit_manifest(
            raw["agent_id"], raw["model_id"], raw["prompt_template"],
            raw.get("policies", []), raw["output_schema"],
            expected_latest=raw.get("expected_latest"),
        )
        application.drain()
        _echo(result)
    except WorkflowError as exc:
        _echo({"code": exc.code, "message": exc.message, "detail": exc.detail})
        sys.exit(1)
    finally:
        application.close()


@main.command("eval")
@click.argument("agent_id")
@click.option("--version", type=int, default=None)
@_common_options
def eval_agent(agent_id, version, config_path, data_dir, seed, storage):
    """Score a manifest version against the golden set."""
    application = Application(_config(config_path, data_dir, seed, storage))
    try:
        result = application.eval_agent(agent_id, version)
        application.drain()
        _echo(result)
    except WorkflowError as exc:
        _echo({"code": exc.code, "message": exc.message, "detail": exc.detail})
        sys.exit(1)
    finally:
        application.close()


@main.command()
@click.argument("agent_id")
@click.option("--reason", default="manual")
@_common_options
def rollback(agent_id, reason, config_path, data_dir, seed, storage):
    """Abort the in-flight candidate rollout for an agent."""
    application = Application(_config(config_path, data_dir, seed, storage))
    try:
        result = application.rollback(agent_id, reason)
        application.drain()
        _echo(result)
    except WorkflowError as exc:
        _echo({"code": exc.code, "message": exc.message, "detail": exc.detail})
        sys.exit(1)
    finally:
        application.close()


@main.group()
def encounter():
    """Encounter operations."""


@encounter.command("requeue")
@click.argument("encounter_id")
@_common_options
def encounter_requeue(encounter_id, config_path, data_dir, seed, storage):
    """Send a quarantined encounter back through generation and review."""
    application = Application(_config(config_path, data_dir, seed, storage))
    try:
        result = application.requeue_encounter(encounter_id)
        application.drain()
        _echo(result)
    except WorkflowError as exc:
        _echo({"code": exc.code, "message": exc.message, "detail": exc.detail})
        sys.exit(1)
    finally:
        application.close()


if __name__ == "__main__":
    main()
