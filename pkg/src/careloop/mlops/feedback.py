"""Feedback loop: reviewer corrections feed the golden set and re-score agents.

Subscribed to review.decided. Corrections normally reach the golden store via
the decision path itself, so this handler's append is a dedupe-checked no-op;
its real job is re-running the offline eval so every correction immediately
refreshes the recorded quality score.
"""

from __future__ import annotations

import logging

from ..errors import DuplicateTaskFeedback, EmptyGoldenSet
from .evaluate import offline_eval

logger = logging.getLogger(__name__)


class FeedbackLoop:
    def __init__(self, tasks, golden, registry, provider, publisher, clock,
                 f1_threshold: float = 0.8):
        self._tasks = tasks
        self._golden = golden
        self._registry = registry
        self._provider = provider
        self._publisher = publisher
        self._clock = clock
        self._f1_threshold = f1_threshold

    def ingest(self, example) -> None:
        """Direct ingestion of an externally built example."""
        if self._golden.has_task(example.source_task_id):
            raise DuplicateTaskFeedback(
                "task already contributed a golden example",
                task_id=example.source_task_id,
            )
        self._golden.append(example)

    def on_review_decided(self, event):
        if event.payload.get("outcome") != "correct":
            return None
        task = self._tasks.get(event.payload["task_id"])
        if task is None:
            logger.warning("correction for unknown task %s", event.payload["task_id"])
            return None
        return self.reevaluate(task.provenance.agent_id)

    def reevaluate(self, agent_id: str):
        if not self._registry.has(agent_id):
            return None
        manifest = self._registry.get(agent_id)
        try:
            result = offline_eval(
                manifest,
                self._provider,
                self._golden.all(),
                self._f1_threshold,
                clock=self._clock,
            )
        except EmptyGoldenSet:
            return None
        if self._publisher is not None:
            self._publisher.publish(
                "eval.recorded", f"eval:{agent_id}", result.to_payload()
            )
        return result
