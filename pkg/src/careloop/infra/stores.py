"""State stores: encounters (optimistic versioning), review tasks, golden set,
and the ingestion-side identity vault that keeps raw identities out of events."""

from __future__ import annotations

import json
import os
import threading

from ..errors import StaleVersion, TaskNotPending
from ..serialization import canonical_json, sha256_hex


class MemoryEncounterRepository:
    """Single source of runtime encounter state. Durability comes from the
    event log: the application rebuilds this repository on startup."""

    def __init__(self):
        self._encounters: dict[str, object] = {}
        self._lock = threading.Lock()

    def get(self, encounter_id: str):
        with self._lock:
            return self._encounters.get(encounter_id)

    def save(self, encounter) -> None:
        with self._lock:
            current = self._encounters.get(encounter.encounter_id)
            if current is None:
                if encounter.version != 1:
                    raise StaleVersion(
                        "new encounters start at version 1",
                        encounter_id=encounter.encounter_id,
                    )
            elif encounter.version != current.version + 1:
                raise StaleVersion(
                    "concurrent mutation detected",
                    encounter_id=encounter.encounter_id,
                    expected=current.version + 1,
                    got=encounter.version,
                )
            self._encounters[encounter.encounter_id] = encounter

    def list_ids(self):
        with self._lock:
            return list(self._encounters)

    def force_put(self, encounter) -> None:
        """Rebuild path only: bypasses the version check."""
        with self._lock:
            self._encounters[encounter.encounter_id] = encounter


class MemoryTaskStore:
    def __init__(self):
        self._tasks: dict[str, object] = {}
        self._lock = threading.Lock()

    def put(self, task) -> None:
        with self._lock:
            self._tasks[task.task_id] = task

    def get(self, task_id: str):
        with self._lock:
            return self._tasks.get(task_id)

    def transition_from_pending(self, task_id: str, updated) -> None:
        """Atomic Pending -> terminal swap; first writer wins."""
        with self._lock:
            current = self._tasks.get(task_id)
            if current is None or current.status.value != "pending":
                raise TaskNotPending(
                    "task is not pending",
                    task_id=task_id,
                    status=None if current is None else current.status.value,
                )
            self._tasks[task_id] = updated

    def all(self) -> list:
        with self._lock:
            return list(self._tasks.values())

    def by_status(self, status) -> list:
        with self._lock:
            return [t for t in self._tasks.values() if t.status == status]


class MemoryGoldenStore:
    def __init__(self):
        self._examples: list = []
        self._task_ids: set[str] = set()
        self._lock = threading.Lock()

    def append(self, example) -> bool:
        """Returns False when this task already contributed an example."""
        with self._lock:
            if example.source_task_id in self._task_ids:
                return False
            self._task_ids.add(example.source_task_id)
            self._examples.append(example)
            self._persist(example)
            return True

    def _persist(self, example) -> None:
        pass

    def has_task(self, task_id: str) -> bool:
        with self._lock:
            return task_id in self._task_ids

    def all(self) -> list:
        with self._lock:
            return list(self._examples)

    def size(self) -> int:
        with self._lock:
            return len(self._examples)


class FileGoldenStore(MemoryGoldenStore):
    """Also appends each example to <path> as line-delimited canonical JSON,
    the export format downstream training pipelines consume. With a decoder,
    existing lines are loaded back on construction."""

    def __init__(self, path: str, decoder=None):
        super().__init__()
        self._path = path
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        if decoder is not None and os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    example = decoder(json.loads(line))
                    self._examples.append(example)
                    self._task_ids.add(example.source_task_id)

    def _persist(self, example) -> None:
        with open(self._path, "a", encoding="utf-8") as fh:
            fh.write(canonical_json(example.to_dict()) + "\n")


class IdentityVault:
    """Maps raw patient identities to stable pseudonymous refs at the door.

    The salt and mapping stay in this adapter (optionally on disk next to the
    data dir); nothing downstream of ingestion ever sees the raw identity.
    """

    def __init__(self, path: str | None = None, salt: str | None = None):
        self._path = path
        self._salt = salt or "desk-scale-static-salt"
        self._refs: dict[str, str] = {}
        self._lock = threading.Lock()
        if path and os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                stored = json.load(fh)
            self._salt = stored.get("salt", self._salt)
            self._refs = dict(stored.get("refs", {}))

    def pseudonymize(self, raw_identity: str) -> str:
        with self._lock:
            ref = self._refs.get(raw_identity)
            if ref is None:
                ref = "pt-" + sha256_hex(self._salt + ":" + raw_identity)[:16]
                self._refs[raw_identity] = ref
                self._flush()
            return ref

    def _flush(self) -> None:
        if not self._path:
            return
        os.makedirs(os.path.dirname(self._path) or ".", exist_ok=True)
        with open(self._path, "w", encoding="utf-8") as fh:
            json.dump({"salt": self._salt, "refs": self._refs}, fh)
