"""The event bus core.

Delivery model: at-least-once with consumer-side dedupe. publish() appends to
the durable log and enqueues deliveries, then returns; it never waits on a
handler (publisher isolation). Events of one trace are always handled by the
same worker in log order (per-trace FIFO); distinct traces may run in
parallel. Failed handlers retry with exponential backoff and jitter, then
dead-letter. Handler failures never propagate to the publisher.
"""

from __future__ import annotations

import logging
import queue
import threading
import time
import zlib
from typing import Callable

from ..errors import DuplicateSubscriberId
from ..runtime import Clock
from .events import (
    DeliveryOutcome,
    DeliveryRecord,
    DomainEvent,
    Subscription,
    match_pattern,
    validate_payload,
)

logger = logging.getLogger(__name__)


class EventBus:
    def __init__(
        self,
        log,
        clock: Clock,
        *,
        workers: int = 4,
        backoff_base_ms: float = 50.0,
        backoff_factor: float = 2.0,
        backoff_jitter_pct: float = 20.0,
        backoff_cap_ms: float = 5000.0,
        rng=None,
        metrics=None,
        publish_duplication: int = 1,
        delivery_duplication: int = 1,
    ):
        self.log = log
        self._clock = clock
        self._metrics = metrics
        self._backoff_base_ms = backoff_base_ms
        self._backoff_factor = backoff_factor
        self._backoff_jitter_pct = backoff_jitter_pct
        self._backoff_cap_ms = backoff_cap_ms
        self._rng = rng
        # test knobs for the idempotency suite; 1 means normal operation
        self.publish_duplication = max(1, publish_duplication)
        self.delivery_duplication = max(1, delivery_duplication)

        self._subscriptions: list[Subscription] = []
        self._sub_keys: set[tuple[str, str]] = set()
        self._offsets_by_event_id: dict[str, int] = {}
        self._last_at_by_trace: dict[str, object] = {}
        self._publish_lock = threading.Lock()

        self._delivered: set[tuple[str, str]] = set()
        self._delivery_records: list[DeliveryRecord] = []
        self._dead: list[dict] = []
        self._records_lock = threading.Lock()

        self._pending = 0
        self._pending_cv = threading.Condition()
        self._stop = threading.Event()
        self._queues = [queue.Queue() for _ in range(max(1, workers))]
        self._workers = [
            threading.Thread(target=self._worker_loop, args=(q,), daemon=True)
            for q in self._queues
        ]
        for event in self.log.read_all():  # resume dedupe state from a prior run
            self._offsets_by_event_id[event.event_id] = len(self._offsets_by_event_id)
            last = self._last_at_by_trace.get(event.trace_id)
            if last is None or event.occurred_at > last:
                self._last_at_by_trace[event.trace_id] = event.occurred_at
        for worker in self._workers:
            worker.start()

    # --- publishing ---------------------------------------------------------

    def publish(self, event: DomainEvent) -> int:
        offset = self._publish_once(event)
        for _ in range(self.publish_duplication - 1):
            self._publish_once(event)
        return offset

    def _publish_once(self, event: DomainEvent) -> int:
        started = time.perf_counter()
        validate_payload(event.event_type, event.schema_version, event.payload)
        with self._publish_lock:
            existing = self._offsets_by_event_id.get(event.event_id)
            if existing is not None:
                return existing
            last = self._last_at_by_trace.get(event.trace_id)
            if last is not None and event.occurred_at < last:
                event.occurred_at = last  # keep per-trace timestamps non-decreasing
            self._last_at_by_trace[event.trace_id] = event.occurred_at
            offset = self.log.append(event)
            self._offsets_by_event_id[event.event_id] = offset
            matched = [s for s in self._subscriptions if match_pattern(s.pattern, event.event_type)]
            for sub in matched:
                for _ in range(self.delivery_duplication):
                    self._enqueue(event, sub)
        if self._metrics is not None:
            self._metrics.record("bus.publish_ms", (time.perf_counter() - started) * 1000.0)
        return offset

    def _enqueue(self, event: DomainEvent, sub: Subscription) -> None:
        with self._pending_cv:
            self._pending += 1
        slot = zlib.crc32(event.trace_id.encode("utf-8")) % len(self._queues)
        self._queues[slot].put((event, sub))

    # --- subscriptions ------------------------------------------------------

    def subscribe(self, sub: Subscription) -> Subscription:
        key = (sub.subscriber_id, sub.pattern)
        with self._publish_lock:
            if key in self._sub_keys:
                raise DuplicateSubscriberId(
                    "subscriber already holds this pattern",
                    subscriber_id=sub.subscriber_id,
                    pattern=sub.pattern,
                )
            self._sub_keys.add(key)
            self._subscriptions.append(sub)
        return sub

    def unsubscribe(self, subscriber_id: str, pattern: str | None = None) -> int:
        with self._publish_lock:
            keep, removed = [], 0
            for sub in self._subscriptions:
                if sub.subscriber_id == subscriber_id and pattern in (None, sub.pattern):
                    self._sub_keys.discard((sub.subscriber_id, sub.pattern))
                    removed += 1
                else:
                    keep.append(sub)
            self._subscriptions = keep
        return removed

    # --- delivery -----------------------------------------------------------

    def _worker_loop(self, work: queue.Queue) -> None:
        while not self._stop.is_set():
            try:
                event, sub = work.get(timeout=0.05)
            except queue.Empty:
                continue
            try:
                self._deliver(event, sub)
            finally:
                with self._pending_cv:
                    self._pending -= 1
                    self._pending_cv.notify_all()

    def _deliver(self, event: DomainEvent, sub: Subscription) -> None:
        key = (sub.subscriber_id, event.event_id)
        if sub.dedupe and key in self._delivered:
            self._record(event, sub, 0, DeliveryOutcome.DEDUPLICATED)
            return
        attempts = sub.max_retries + 1
        for attempt in range(1, attempts + 1):
            started = time.perf_counter()
            try:
                sub.handler(event)
            except Exception as exc:
                logger.warning(
                    "delivery failed: %s -> %s attempt %d: %s",
                    event.event_type, sub.subscriber_id, attempt, exc,
                )
                if attempt >= attempts:
                    self._record(event, sub, attempt, DeliveryOutcome.DEAD_LETTERED, str(exc))
                    if sub.dead_letter:
                        with self._records_lock:
                            self._dead.append(
                                {"event": event, "subscriber_id": sub.subscriber_id, "error": str(exc)}
                            )
                    return
                self._record(event, sub, attempt, DeliveryOutcome.FAILED, str(exc))
                self._sleep_backoff(attempt)
            else:
                elapsed_ms = (time.perf_counter() - started) * 1000.0
                if self._metrics is not None:
                    self._metrics.record("bus.delivery_ms", elapsed_ms)
                    self._metrics.span(
                        trace_id=event.trace_id,
                        name=f"deliver:{event.event_type}:{sub.subscriber_id}",
                        duration_ms=elapsed_ms,
                    )
                with self._records_lock:
                    self._delivered.add(key)
                self._record(event, sub, attempt, DeliveryOutcome.DELIVERED)
                return

    def _sleep_backoff(self, attempt: int) -> None:
        delay_ms = self._backoff_base_ms * (self._backoff_factor ** (attempt - 1))
        delay_ms = min(delay_ms, self._backoff_cap_ms)
        if self._rng is not None:
            jitter = self._backoff_jitter_pct / 100.0
            delay_ms *= 1.0 + self._rng.uniform(-jitter, jitter)
        deadline = time.monotonic() + delay_ms / 1000.0
        while not self._stop.is_set():  # interruptible so shutdown stays prompt
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return
            time.sleep(min(remaining, 0.05))

    def _record(self, event, sub, attempt, outcome, error=None) -> None:
        with self._records_lock:
            self._delivery_records.append(
                DeliveryRecord(
                    event_id=event.event_id,
                    subscriber_id=sub.subscriber_id,
                    attempt=attempt,
                    outcome=outcome,
                    at=self._clock.now(),
                    error=error,
                )
            )

    # --- inspection and control ---------------------------------------------

    def replay(self, trace_id: str) -> list[DomainEvent]:
        return self.log.read_trace(trace_id)

    def delivery_records(self) -> list[DeliveryRecord]:
        with self._records_lock:
            return list(self._delivery_records)

    def dead_letters(self) -> list[dict]:
        with self._records_lock:
            return list(self._dead)

    def requeue_dead_letters(self) -> int:
        with self._records_lock:
            drained, self._dead = self._dead, []
        by_key = {}
        with self._publish_lock:
            subs = {(s.subscriber_id, s.pattern): s for s in self._subscriptions}
        requeued = 0
        for item in drained:
            for sub in subs.values():
                if sub.subscriber_id == item["subscriber_id"] and match_pattern(
                    sub.pattern, item["event"].event_type
                ):
                    self._enqueue(item["event"], sub)
                    requeued += 1
                    break
        return requeued

    def drain(self, timeout: float = 30.0) -> bool:
        deadline = time.monotonic() + timeout
        with self._pending_cv:
            while self._pending > 0:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return False
                self._pending_cv.wait(timeout=min(remaining, 0.1))
        return True

    def shutdown(self, drain: bool = True, timeout: float = 10.0) -> None:
        if drain:
            self.drain(timeout=timeout)
        self._stop.set()
        for worker in self._workers:
            worker.join(timeout=1.0)
