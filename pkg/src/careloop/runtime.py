"""Clock and id sources. Seeded instances make full replays reproducible."""

from __future__ import annotations

import random
import threading
import uuid
from datetime import datetime, timedelta, timezone


class Clock:
    """Wall clock. `advance` only exists on the simulated variant."""

    def now(self) -> datetime:
        return datetime.now(timezone.utc)

    def advance(self, seconds: float) -> None:
        raise NotImplementedError("only a simulated clock can be advanced")


class SimulatedClock(Clock):
    """Starts at a fixed instant and ticks 1ms forward on every read.

    The per-read tick keeps timestamps strictly increasing without any
    dependence on wall time, which is what makes scenario replays byte-stable.
    """

    DEFAULT_START = datetime(2024, 10, 1, 8, 0, 0, tzinfo=timezone.utc)

    def __init__(self, start: datetime | None = None, tick_ms: int = 1):
        self._now = start or self.DEFAULT_START
        self._tick = timedelta(milliseconds=tick_ms)
        self._lock = threading.Lock()

    def now(self) -> datetime:
        with self._lock:
            self._now += self._tick
            return self._now

    def advance(self, seconds: float) -> None:
        with self._lock:
            self._now += timedelta(seconds=seconds)


class IdGenerator:
    """UUID4-shaped ids; a seeded generator replays the identical sequence."""

    def __init__(self, seed: int | None = None):
        self._rng = random.Random(seed) if seed is not None else None
        self._lock = threading.Lock()

    def uuid(self, prefix: str = "") -> str:
        if self._rng is None:
            value = uuid.uuid4().hex
        else:
            with self._lock:
                value = uuid.UUID(int=self._rng.getrandbits(128), version=4).hex
        return f"{prefix}{value}" if prefix else value
