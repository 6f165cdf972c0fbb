"""Abstract ports the core depends on. Adapters implement these outside the core."""

from __future__ import annotations

from typing import Any, Iterable, Protocol, runtime_checkable


@runtime_checkable
class EventPublisher(Protocol):
    def publish(self, event_type: str, trace_id: str, payload: dict) -> str:
        """Publish a workflow event; returns the event id. Must not block on handlers."""
        ...


@runtime_checkable
class EncounterRepository(Protocol):
    def get(self, encounter_id: str):
        """Return the Encounter or None."""
        ...

    def save(self, encounter) -> None:
        """Persist with optimistic versioning; raises StaleVersion on a lost race."""
        ...

    def list_ids(self) -> Iterable[str]:
        ...


@runtime_checkable
class PiiScanner(Protocol):
    def scan(self, text: str) -> list:
        ...

    def redact(self, text: str) -> str:
        ...


@runtime_checkable
class ModelProvider(Protocol):
    def complete(self, request: Any) -> Any:
        """Takes a ModelRequest, returns a ModelResponse; raises ProviderError."""
        ...


@runtime_checkable
class ArtifactStore(Protocol):
    def put(self, data: bytes, kind: str):
        """Content-addressed write; identical bytes yield the identical artifact id."""
        ...

    def get(self, artifact_id: str) -> bytes:
        ...


@runtime_checkable
class Notifier(Protocol):
    def notify(self, channel: str, message: str, reason: str):
        """Fire-and-forget; failures are recorded, never raised."""
        ...
