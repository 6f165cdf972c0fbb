"""Tamper-evident audit log.

Each record chains to its predecessor: record_hash = sha256(prev_hash +
canonical(all fields except record_hash)), genesis prev_hash is 64 zero hex
chars, seq is dense from 0. The on-disk format is one canonical key-sorted
JSON object per line, so verification is reproducible by any external script
from the file alone (see scripts/verify_audit.py). A truncated suffix is the
one tampering this scheme cannot detect; anchor the latest hash externally if
that matters operationally.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime
from enum import Enum

from ..runtime import Clock
from ..serialization import (
    GENESIS_HASH,
    canonical_json,
    chain_digest,
    format_ts,
    parse_ts,
)


class AuditAction(str, Enum):
    TASK_CREATED = "TaskCreated"
    APPROVED = "Approved"
    CORRECTED = "Corrected"
    REJECTED = "Rejected"
    VERSION_LOCKED = "VersionLocked"
    ROLLED_BACK = "RolledBack"
    GOLDEN_SET_APPENDED = "GoldenSetAppended"
    RULE_UPDATED = "RuleUpdated"
    EXPIRED = "Expired"
    EVENT_REJECTED = "EventRejected"


@dataclass(frozen=True)
class AuditRecord:
    seq: int
    trace_id: str
    reviewer_id: str
    action: str
    detail: str  # canonical JSON text describing the action
    at: datetime
    prev_hash: str
    record_hash: str

    def chain_fields(self) -> dict:
        return {
            "seq": self.seq,
            "trace_id": self.trace_id,
            "reviewer_id": self.reviewer_id,
            "action": self.action,
            "detail": self.detail,
            "at": format_ts(self.at),
            "prev_hash": self.prev_hash,
        }

    def to_line(self) -> str:
        fields = self.chain_fields()
        fields["record_hash"] = self.record_hash
        return canonical_json(fields)


_REQUIRED = ("seq", "trace_id", "reviewer_id", "action", "detail", "at",
             "prev_hash", "record_hash")


def _check_record(raw: dict, index: int, prev_hash: str) -> str | None:
    """Returns the record's hash when valid, None when anything is off."""
    if not isinstance(raw, dict) or any(k not in raw for k in _REQUIRED):
        return None
    if raw["seq"] != index or raw["prev_hash"] != prev_hash:
        return None
    stored = raw["record_hash"]
    if not isinstance(stored, str) or len(stored) != 64 or stored != stored.lower():
        return None
    fields = {k: raw[k] for k in _REQUIRED if k != "record_hash"}
    if chain_digest(raw["prev_hash"], fields) != stored:
        return None
    return stored


def verify_records(lines: list[bytes]) -> tuple[bool, int | None]:
    prev = GENESIS_HASH
    for i, raw in enumerate(lines):
        try:
            record = json.loads(raw.decode("utf-8"))
        except Exception:
            return False, i
        stored = _check_record(record, i, prev)
        if stored is None:
            return False, i
        prev = stored
    return True, None


def verify_audit_file(path: str) -> tuple[bool, int | None]:
    """Verify straight from disk; an empty or absent log is vacuously ok."""
    if not os.path.exists(path):
        return True, None
    with open(path, "rb") as fh:
        data = fh.read()
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines = lines[:-1]
    return verify_records(lines)


class AuditLog:
    """Append-only, atomic, totally ordered. Optionally file-backed."""

    def __init__(self, clock: Clock, path: str | None = None):
        self._clock = clock
        self._path = path
        self._records: list[AuditRecord] = []
        self._last_hash = GENESIS_HASH
        self._lock = threading.Lock()
        if path and os.path.exists(path):
            self._load(path)

    def _load(self, path: str) -> None:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                raw = json.loads(line)
                record = AuditRecord(
                    seq=raw["seq"],
                    trace_id=raw["trace_id"],
                    reviewer_id=raw["reviewer_id"],
                    action=raw["action"],
                    detail=raw["detail"],
                    at=parse_ts(raw["at"]),
                    prev_hash=raw["prev_hash"],
                    record_hash=raw["record_hash"],
                )
                self._records.append(record)
                self._last_hash = record.record_hash

    def append(self, trace_id: str, reviewer_id: str, action, detail) -> AuditRecord:
        action_value = action.value if isinstance(action, AuditAction) else str(action)
        detail_text = detail if isinstance(detail, str) else canonical_json(detail)
        with self._lock:
            record = AuditRecord(
                seq=len(self._records),
                trace_id=trace_id,
                reviewer_id=reviewer_id,
                action=action_value,
                detail=detail_text,
                at=self._clock.now(),
                prev_hash=self._last_hash,
                record_hash="",
            )
            record = AuditRecord(
                **{**record.__dict__, "record_hash": chain_digest(
                    record.prev_hash, record.chain_fields()
                )}
            )
            self._records.append(record)
            self._last_hash = record.record_hash
            if self._path:
                os.makedirs(os.path.dirname(self._path) or ".", exist_ok=True)
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(record.to_line() + "\n")
            return record

    def records(self) -> list[AuditRecord]:
        with self._lock:
            return list(self._records)

    def has_seq(self, seq: int) -> bool:
        with self._lock:
            return 0 <= seq < len(self._records)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def verify(self) -> tuple[bool, int | None]:
        with self._lock:
            lines = [r.to_line().encode("utf-8") for r in self._records]
        return verify_records(lines)
