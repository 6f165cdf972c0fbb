"""Append-only event logs with a maintained hash chain.

File format: one event per line, canonical key-sorted JSON, chain_hash as
lowercase hex. chain_hash(i) = sha256(chain_hash(i-1) + canonical(fields
without chain_hash)); the genesis predecessor is 64 zero chars. Offsets are
dense from 0 and equal the line index, which makes the file the system of
record for replay.
"""

from __future__ import annotations

import json
import os
import threading

from ..bus.events import DomainEvent
from ..errors import LogUnavailable
from ..serialization import GENESIS_HASH, chain_digest


class InMemoryEventLog:
    def __init__(self):
        self._events: list[DomainEvent] = []
        self._by_trace: dict[str, list[DomainEvent]] = {}
        self._last_hash = GENESIS_HASH
        self._lock = threading.Lock()

    def append(self, event: DomainEvent) -> int:
        with self._lock:
            event.chain_hash = chain_digest(self._last_hash, event.chain_fields())
            self._last_hash = event.chain_hash
            self._events.append(event)
            self._by_trace.setdefault(event.trace_id, []).append(event)
            return len(self._events) - 1

    def read_all(self) -> list[DomainEvent]:
        with self._lock:
            return list(self._events)

    def read_trace(self, trace_id: str) -> list[DomainEvent]:
        with self._lock:
            return list(self._by_trace.get(trace_id, []))

    def __len__(self) -> int:
        with self._lock:
            return len(self._events)


class FileEventLog(InMemoryEventLog):
    """Durable variant; keeps the in-memory index and appends each line to disk."""

    def __init__(self, path: str):
        super().__init__()
        self._path = path
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        if os.path.exists(path):
            self._load()
        self._fh = open(path, "a", encoding="utf-8")

    def _load(self) -> None:
        with open(self._path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = DomainEvent.from_line(line)
                self._events.append(event)
                self._by_trace.setdefault(event.trace_id, []).append(event)
                self._last_hash = event.chain_hash

    def append(self, event: DomainEvent) -> int:
        with self._lock:
            if self._fh.closed:
                raise LogUnavailable("event log is closed", path=self._path)
            event.chain_hash = chain_digest(self._last_hash, event.chain_fields())
            self._last_hash = event.chain_hash
            self._events.append(event)
            self._by_trace.setdefault(event.trace_id, []).append(event)
            self._fh.write(event.to_line() + "\n")
            self._fh.flush()
            return len(self._events) - 1

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.close()


def verify_event_log(path: str) -> tuple[bool, int | None]:
    """Recompute the chain over the raw file; (ok, first bad line index)."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise LogUnavailable(str(exc), path=path)
    prev = GENESIS_HASH
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines = lines[:-1]
    for i, raw in enumerate(lines):
        try:
            record = json.loads(raw.decode("utf-8"))
            stored = record.pop("chain_hash")
        except Exception:
            return False, i
        if not isinstance(stored, str) or chain_digest(prev, record) != stored:
            return False, i
        prev = stored
    return True, None
