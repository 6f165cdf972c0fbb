"""Metrics registry: counters, latency windows with nearest-rank percentiles, spans."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from datetime import datetime

from ..errors import EmptyWindow
from ..runtime import Clock


def nearest_rank(sorted_values: list[float], quantile: float) -> float:
    """Nearest-rank percentile: value at rank ceil(q*n), 1-indexed."""
    if not sorted_values:
        raise EmptyWindow("no samples")
    rank = math.ceil(quantile * len(sorted_values))
    rank = min(max(rank, 1), len(sorted_values))
    return sorted_values[rank - 1]


@dataclass(frozen=True)
class LatencySummary:
    count: int
    p50: float
    p90: float
    max: float


@dataclass
class TraceSpan:
    trace_id: str
    name: str
    start: datetime
    duration_ms: float
    parent: str | None = None


class MetricsRegistry:
    def __init__(self, clock: Clock | None = None, max_spans: int = 50000):
        self._clock = clock or Clock()
        self._series: dict[str, list[float]] = {}
        self._counters: dict[str, int] = {}
        self._spans: list[TraceSpan] = []
        self._max_spans = max_spans
        self._lock = threading.Lock()

    def record(self, name: str, value: float) -> None:
        with self._lock:
            self._series.setdefault(name, []).append(float(value))

    def incr(self, name: str, by: int = 1) -> None:
        with self._lock:
            self._counters[name] = self._counters.get(name, 0) + by

    def span(self, trace_id: str, name: str, duration_ms: float, parent: str | None = None) -> None:
        with self._lock:
            if len(self._spans) < self._max_spans:
                self._spans.append(
                    TraceSpan(trace_id, name, self._clock.now(), float(duration_ms), parent)
                )

    def summary(self, name: str, window: int | None = None) -> LatencySummary:
        with self._lock:
            values = list(self._series.get(name, ()))
        if window is not None:
            values = values[-window:]
        if not values:
            raise EmptyWindow("no samples for series", series=name)
        ordered = sorted(values)
        return LatencySummary(
            count=len(ordered),
            p50=nearest_rank(ordered, 0.50),
            p90=nearest_rank(ordered, 0.90),
            max=ordered[-1],
        )

    def series_names(self) -> list[str]:
        with self._lock:
            return sorted(self._series)

    def counters(self) -> dict[str, int]:
        with self._lock:
            return dict(self._counters)

    def spans(self) -> list[TraceSpan]:
        with self._lock:
            return list(self._spans)

    def count(self, name: str) -> int:
        with self._lock:
            return len(self._series.get(name, ()))

    def snapshot(self) -> dict:
        """JSON-friendly view for the /v1/metrics endpoint."""
        out: dict = {"series": {}, "counters": self.counters()}
        for name in self.series_names():
            try:
                s = self.summary(name)
            except EmptyWindow:
                continue
            out["series"][name] = {
                "count": s.count,
                "p50_ms": round(s.p50, 3),
                "p90_ms": round(s.p90, 3),
                "max_ms": round(s.max, 3),
            }
        out["spans"] = len(self.spans())
        return out
