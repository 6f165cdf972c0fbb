"""Staged rollout ladder with canary routing and guardrail auto-rollback.

A candidate walks Shadow -> Canary -> Gradual -> Full, one rung at a time.
Each promotion re-runs the offline eval against the golden set (waived only
while the set is empty). Canary assignment is deterministic per trace. A
sliding window of serving outcomes trips an automatic rollback once failures
reach the breach threshold; rollback restores the prior active version,
emits rollout.rolled_back and appends an audit record.
"""

from __future__ import annotations

import json
import os
import threading
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum

from ..errors import EvalGateFailed, IllegalStageJump, NotFound, VersionConflict
from ..governance.audit import AuditAction
from ..runtime import Clock
from ..serialization import canonical_json, format_ts, parse_ts, sha256_hex
from .evaluate import offline_eval


class Stage(str, Enum):
    SHADOW = "shadow"
    CANARY = "canary"
    GRADUAL = "gradual"
    FULL = "full"


_LADDER = (Stage.SHADOW, Stage.CANARY, Stage.GRADUAL, Stage.FULL)


@dataclass(frozen=True)
class Route:
    serving_version: int
    shadow_version: int | None = None
    served_candidate: bool = False


@dataclass
class RolloutState:
    agent_id: str
    active_version: int
    candidate_version: int | None = None
    stage: Stage | None = None
    traffic_pct: int = 0
    window: deque = field(default_factory=deque)
    updated_at: datetime | None = None

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "active_version": self.active_version,
            "candidate_version": self.candidate_version,
            "stage": self.stage.value if self.stage else None,
            "traffic_pct": self.traffic_pct,
            "window": [1 if ok else 0 for ok in self.window],
            "updated_at": format_ts(self.updated_at) if self.updated_at else None,
        }

    @classmethod
    def from_dict(cls, raw: dict, window_size: int) -> "RolloutState":
        state = cls(
            agent_id=raw["agent_id"],
            active_version=raw["active_version"],
            candidate_version=raw.get("candidate_version"),
            stage=Stage(raw["stage"]) if raw.get("stage") else None,
            traffic_pct=raw.get("traffic_pct", 0),
            window=deque(
                (bool(v) for v in raw.get("window", [])), maxlen=window_size
            ),
            updated_at=parse_ts(raw["updated_at"]) if raw.get("updated_at") else None,
        )
        return state


def canary_bucket(trace_id: str) -> int:
    return int(sha256_hex(trace_id), 16) % 100


class RolloutManager:
    def __init__(self, registry, golden, provider, audit, publisher, clock: Clock,
                 window: int = 50, breach_threshold: int = 3, eval_gate: float = 0.9,
                 f1_threshold: float = 0.8, canary_pct: int = 10,
                 gradual_pct: int = 50, path: str | None = None):
        self._registry = registry
        self._golden = golden
        self._provider = provider
        self._audit = audit
        self._publisher = publisher
        self._clock = clock
        self._window = window
        self._breach_threshold = breach_threshold
        self._eval_gate = eval_gate
        self._f1_threshold = f1_threshold
        self._canary_pct = canary_pct
        self._gradual_pct = gradual_pct
        self._path = path
        self._states: dict[str, RolloutState] = {}
        self._lock = threading.RLock()
        if path and os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
            for agent_id, state_raw in raw.items():
                self._states[agent_id] = RolloutState.from_dict(state_raw, window)

    def _persist(self) -> None:
        if not self._path:
            return
        os.makedirs(os.path.dirname(self._path) or ".", exist_ok=True)
        tmp = self._path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(canonical_json(
                {agent_id: state.to_dict() for agent_id, state in self._states.items()}
            ))
        os.replace(tmp, self._path)

    # --- lifecycle -------------------------------------------------------------

    def activate(self, agent_id: str, version: int) -> RolloutState:
        """Bootstrap path: make a version fully active when no rollout exists."""
        self._registry.get(agent_id, version)
        with self._lock:
            state = self._states.get(agent_id)
            if state is not None:
                return state
            state = RolloutState(
                agent_id=agent_id,
                active_version=version,
                window=deque(maxlen=self._window),
                updated_at=self._clock.now(),
            )
            self._states[agent_id] = state
            self._persist()
            return state

    def stage_candidate(self, agent_id: str, version: int) -> RolloutState:
        self._registry.get(agent_id, version)
        with self._lock:
            state = self._require(agent_id)
            if version == state.active_version:
                raise VersionConflict(
                    "version is already fully active", agent_id=agent_id, version=version
                )
            if state.candidate_version == version and state.stage is Stage.SHADOW:
                return state
            if state.candidate_version is not None:
                raise VersionConflict(
                    "another candidate is mid-rollout",
                    agent_id=agent_id, candidate=state.candidate_version,
                )
            state.candidate_version = version
            state.stage = Stage.SHADOW
            state.traffic_pct = 0
            state.window = deque(maxlen=self._window)
            state.updated_at = self._clock.now()
            self._persist()
        self._emit_staged(agent_id, version, Stage.SHADOW, 0)
        return state

    def promote(self, agent_id: str, to_stage: Stage | str | None = None) -> dict:
        with self._lock:
            state = self._require(agent_id)
            if state.candidate_version is None or state.stage is None:
                raise IllegalStageJump("no candidate staged", agent_id=agent_id)
            next_stage = _LADDER[_LADDER.index(state.stage) + 1]
            if to_stage is not None and Stage(to_stage) is not next_stage:
                raise IllegalStageJump(
                    "rollouts advance one rung at a time",
                    agent_id=agent_id,
                    current=state.stage.value,
                    requested=Stage(to_stage).value,
                )
            candidate = state.candidate_version
            eval_payload, waived = self._gate(agent_id, candidate)
            if next_stage is Stage.CANARY:
                state.stage = Stage.CANARY
                state.traffic_pct = self._canary_pct
            elif next_stage is Stage.GRADUAL:
                state.stage = Stage.GRADUAL
                state.traffic_pct = self._gradual_pct
            else:
                state.active_version = candidate
                state.candidate_version = None
                state.stage = None
                state.traffic_pct = 0
                state.window = deque(maxlen=self._window)
            state.updated_at = self._clock.now()
            self._persist()
            pct = 100 if next_stage is Stage.FULL else state.traffic_pct
        self._emit_staged(agent_id, candidate, next_stage, pct)
        return {
            "agent_id": agent_id,
            "candidate_version": candidate,
            "stage": next_stage.value,
            "traffic_pct": pct,
            "eval": eval_payload,
            "gate_waived": waived,
        }

    def _gate(self, agent_id: str, candidate: int):
        examples = self._golden.all()
        if not examples:
            return None, True
        manifest = self._registry.get(agent_id, candidate)
        result = offline_eval(
            manifest, self._provider, examples, self._f1_threshold, clock=self._clock
        )
        if self._publisher is not None:
            self._publisher.publish(
                "eval.recorded", f"rollout:{agent_id}", result.to_payload()
            )
        if result.score < self._eval_gate:
            raise EvalGateFailed(
                "candidate scored below the promotion gate",
                agent_id=agent_id,
                version=candidate,
                score=result.score,
                gate=self._eval_gate,
            )
        return result.to_payload(), False

    # --- serving ---------------------------------------------------------------

    def route(self, agent_id: str, trace_id: str) -> Route:
        with self._lock:
            state = self._require(agent_id)
            if state.candidate_version is None or state.stage is None:
                return Route(state.active_version)
            if state.stage is Stage.SHADOW:
                return Route(state.active_version, shadow_version=state.candidate_version)
            if canary_bucket(trace_id) < state.traffic_pct:
                return Route(state.candidate_version, served_candidate=True)
            return Route(state.active_version)

    def record_outcome(self, agent_id: str, version: int, ok: bool) -> bool:
        """Feed one serving outcome into the guardrail. Returns True when this
        outcome tripped an automatic rollback."""
        with self._lock:
            state = self._states.get(agent_id)
            if (
                state is None
                or state.candidate_version != version
                or state.stage not in (Stage.CANARY, Stage.GRADUAL)
            ):
                return False
            state.window.append(ok)
            failures = sum(1 for outcome in state.window if not outcome)
            if failures < self._breach_threshold:
                self._persist()
                return False
            self._rollback_locked(state, reason="guardrail_breach")
        return True

    def rollback(self, agent_id: str, reason: str = "manual") -> dict:
        with self._lock:
            state = self._require(agent_id)
            if state.candidate_version is None:
                raise NotFound("no candidate to roll back", agent_id=agent_id)
            return self._rollback_locked(state, reason)

    def _rollback_locked(self, state: RolloutState, reason: str) -> dict:
        candidate = state.candidate_version
        restored = state.active_version
        state.candidate_version = None
        state.stage = None
        state.traffic_pct = 0
        state.window = deque(maxlen=self._window)
        state.updated_at = self._clock.now()
        self._persist()
        detail = {
            "agent_id": state.agent_id,
            "candidate_version": candidate,
            "restored_version": restored,
            "reason": reason,
        }
        if self._audit is not None:
            self._audit.append(
                f"rollout:{state.agent_id}", "system", AuditAction.ROLLED_BACK, detail
            )
        if self._publisher is not None:
            self._publisher.publish(
                "rollout.rolled_back", f"rollout:{state.agent_id}", detail
            )
        return detail

    # --- introspection -----------------------------------------------------------

    def state(self, agent_id: str) -> RolloutState:
        with self._lock:
            return self._require(agent_id)

    def states(self) -> dict:
        with self._lock:
            return {agent_id: state.to_dict() for agent_id, state in self._states.items()}

    def _require(self, agent_id: str) -> RolloutState:
        state = self._states.get(agent_id)
        if state is None:
            raise NotFound("no rollout state for agent", agent_id=agent_id)
        return state

    def _emit_staged(self, agent_id: str, version: int, stage: Stage, pct: int) -> None:
        if self._publisher is None:
            return
        self._publisher.publish(
            "rollout.staged", f"rollout:{agent_id}",
            {
                "agent_id": agent_id,
                "candidate_version": version,
                "stage": stage.value,
                "traffic_pct": pct,
            },
        )
