"""Fire-and-forget notification sinks. Failures are recorded, never raised."""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from datetime import datetime

import httpx

from ..runtime import Clock

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NotificationRecord:
    channel: str
    message: str
    reason: str
    ok: bool
    at: datetime
    error: str | None = None


class _RecordingNotifier:
    def __init__(self, clock: Clock):
        self._clock = clock
        self._records: list[NotificationRecord] = []
        self._lock = threading.Lock()

    def records(self) -> list[NotificationRecord]:
        with self._lock:
            return list(self._records)

    def _log(self, channel, message, reason, ok, error=None) -> NotificationRecord:
        record = NotificationRecord(channel, message, reason, ok, self._clock.now(), error)
        with self._lock:
            self._records.append(record)
        return record


class LogNotifier(_RecordingNotifier):
    def notify(self, channel: str, message: str, reason: str) -> NotificationRecord:
        logger.info("notify[%s] (%s): %s", channel, reason, message)
        return self._log(channel, message, reason, ok=True)


class WebhookNotifier(_RecordingNotifier):
    def __init__(self, url: str, clock: Clock, client: httpx.Client | None = None):
        super().__init__(clock)
        self._url = url
        self._client = client or httpx.Client(timeout=2.0)

    def notify(self, channel: str, message: str, reason: str) -> NotificationRecord:
        try:
            response = self._client.post(
                self._url, json={"channel": channel, "message": message, "reason": reason}
            )
            response.raise_for_status()
            return self._log(channel, message, reason, ok=True)
        except Exception as exc:
            logger.warning("webhook notify failed: %s", exc)
            return self._log(channel, message, reason, ok=False, error=str(exc))


class CompositeNotifier(_RecordingNotifier):
    """Routes to every configured sink; its own record list is the union view."""

    def __init__(self, clock: Clock, sinks: list | None = None):
        super().__init__(clock)
        self._sinks = sinks or [LogNotifier(clock)]

    def notify(self, channel: str, message: str, reason: str) -> NotificationRecord:
        ok, error = True, None
        for sink in self._sinks:
            record = sink.notify(channel, message, reason)
            if not record.ok:
                ok, error = False, record.error
        return self._log(channel, message, reason, ok=ok, error=error)
