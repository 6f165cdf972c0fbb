"""Shared pipeline drivers for the test modules.

Everything here goes through the public facade only, the same calls the HTTP
layer makes, so tests exercise the real wiring.
"""

from careloop.application import Application
from careloop.infra import AppConfig

VALID_ANSWERS = ("headache", "2 days", "4", "none", "none")
CONSULT_NOTES = "clinician reviewed the case, vitals within normal range"
OPENING = "i have a headache, what should i do"


def make_app(tmp_path=None, *, seed=7, storage="memory", **overrides) -> Application:
    config = AppConfig(
        storage=storage,
        data_dir=str(tmp_path) if tmp_path is not None else "./data",
        seed=seed,
        **overrides,
    )
    return Application(config)


def drive_to_review(app: Application, patient: str = "ana figueira",
                    opening: str = OPENING, answers=VALID_ANSWERS,
                    notes: str = CONSULT_NOTES):
    """Run one encounter up to a pending review task.

    Returns (encounter_id, task dict). Drains after every call so handlers
    finish before the next message arrives, mirroring interactive pacing.
    """
    result = app.ingest_message(patient, opening)
    encounter_id = result["encounter_id"]
    assert app.drain()
    for answer in answers:
        app.ingest_message(None, answer, encounter_id=encounter_id)
        assert app.drain()
    app.attach_consult_notes(encounter_id, notes)
    assert app.drain()
    pending = [
        t for t in app.list_tasks(status="pending")
        if t["encounter_id"] == encounter_id
    ]
    assert len(pending) == 1, f"expected 1 pending task, got {len(pending)}"
    return encounter_id, pending[0]


def patient_notifications(app: Application, recipient: str | None = None):
    records = app.notifier.records()
    if recipient is None:
        return [r for r in records if r.channel == "patient"]
    return [r for r in records if r.channel == "patient" and recipient in r.message]
