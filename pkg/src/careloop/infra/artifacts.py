"""Content-addressed artifact store: transcripts, drafts, final outputs."""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass
from datetime import datetime

from ..errors import NotFound
from ..runtime import Clock
from ..serialization import sha256_hex


@dataclass(frozen=True)
class ArtifactRef:
    artifact_id: str  # sha256 of the content; identical bytes, identical id
    kind: str
    size_bytes: int
    stored_at: datetime


class MemoryArtifactStore:
    def __init__(self, clock: Clock):
        self._clock = clock
        self._blobs: dict[str, bytes] = {}
        self._refs: dict[str, ArtifactRef] = {}
        self._lock = threading.Lock()

    def put(self, data: bytes, kind: str) -> ArtifactRef:
        artifact_id = sha256_hex(data)
        with self._lock:
            existing = self._refs.get(artifact_id)
            if existing is not None:
                return existing
            ref = ArtifactRef(artifact_id, kind, len(data), self._clock.now())
            self._blobs[artifact_id] = data
            self._refs[artifact_id] = ref
            return ref

    def get(self, artifact_id: str) -> bytes:
        with self._lock:
            if artifact_id not in self._blobs:
                raise NotFound("no such artifact", artifact_id=artifact_id)
            return self._blobs[artifact_id]

    def __contains__(self, artifact_id: str) -> bool:
        with self._lock:
            return artifact_id in self._blobs


class FileArtifactStore(MemoryArtifactStore):
    """Writes each blob to <dir>/<hash>; rereads lazily after restart."""

    def __init__(self, directory: str, clock: Clock):
        super().__init__(clock)
        self._dir = directory
        os.makedirs(directory, exist_ok=True)

    def put(self, data: bytes, kind: str) -> ArtifactRef:
        ref = super().put(data, kind)
        path = os.path.join(self._dir, ref.artifact_id)
        if not os.path.exists(path):
            tmp = path + ".tmp"
            with open(tmp, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        return ref

    def get(self, artifact_id: str) -> bytes:
        try:
            return super().get(artifact_id)
        except NotFound:
            path = os.path.join(self._dir, artifact_id)
            if not os.path.exists(path):
                raise
            with open(path, "rb") as fh:
                data = fh.read()
            with self._lock:
                self._blobs[artifact_id] = data
            return data

    def __contains__(self, artifact_id: str) -> bool:
        return super().__contains__(artifact_id) or os.path.exists(
            os.path.join(self._dir, artifact_id)
        )
