"""Adapters: durable logs, stores, PII scanning, metrics, notifications, config."""

from .eventlog import FileEventLog, InMemoryEventLog, verify_event_log
from .artifacts import ArtifactRef, FileArtifactStore, MemoryArtifactStore
from .pii import Finding, PiiPattern, RegexPiiScanner, default_patterns
from .metrics import LatencySummary, MetricsRegistry, nearest_rank
from .notify import CompositeNotifier, LogNotifier, NotificationRecord, WebhookNotifier
from .stores import (
    MemoryEncounterRepository,
    MemoryGoldenStore,
    FileGoldenStore,
    MemoryTaskStore,
    IdentityVault,
)
from .config import AppConfig, load_config

__all__ = [
    "AppConfig",
    "ArtifactRef",
    "CompositeNotifier",
    "FileArtifactStore",
    "FileEventLog",
    "FileGoldenStore",
    "Finding",
    "IdentityVault",
    "InMemoryEventLog",
    "LatencySummary",
    "LogNotifier",
    "MemoryArtifactStore",
    "MemoryEncounterRepository",
    "MemoryGoldenStore",
    "MemoryTaskStore",
    "MetricsRegistry",
    "NotificationRecord",
    "PiiPattern",
    "RegexPiiScanner",
    "WebhookNotifier",
    "default_patterns",
    "load_config",
    "nearest_rank",
    "verify_event_log",
]
