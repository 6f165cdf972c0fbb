"""Versioned agent manifests and the content-addressed registry.

A manifest pins everything that shapes an agent's behavior: model id, prompt
template, behavioral policies and the output schema. Re-submitting identical
content is a no-op that returns the already-registered version, so retries and
config re-applies never burn version numbers.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime

from ..agents.provider import FieldSpec, ModelRequest
from ..errors import NotFound, VersionConflict
from ..runtime import Clock
from ..serialization import canonical_json, format_ts, parse_ts, sha256_hex


@dataclass(frozen=True)
class AgentManifest:
    agent_id: str
    version: int
    model_id: str
    prompt_template: str
    policies: tuple
    output_schema: tuple
    created_at: datetime
    content_hash: str

    @staticmethod
    def compute_hash(agent_id: str, model_id: str, prompt_template: str,
                     policies: tuple, output_schema: tuple) -> str:
        body = {
            "agent_id": agent_id,
            "model_id": model_id,
            "prompt_template": prompt_template,
            "policies": list(policies),
            "output_schema": [spec.to_dict() for spec in output_schema],
        }
        return sha256_hex(canonical_json(body))

    def render_instruction(self, context_lines) -> str:
        instruction = self.prompt_template
        instruction = instruction.replace("{{context}}", "\n".join(context_lines))
        instruction = instruction.replace("{{policies}}", ", ".join(self.policies))
        return instruction

    def build_request(self, context_lines) -> ModelRequest:
        return ModelRequest(
            agent_id=self.agent_id,
            agent_version=self.version,
            model_id=self.model_id,
            instruction=self.render_instruction(context_lines),
            context=tuple(context_lines),
            policies=tuple(self.policies),
            output_schema=tuple(self.output_schema),
        )

    def label(self) -> str:
        return f"{self.agent_id}@{self.version}"

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "version": self.version,
            "model_id": self.model_id,
            "prompt_template": self.prompt_template,
            "policies": list(self.policies),
            "output_schema": [spec.to_dict() for spec in self.output_schema],
            "created_at": format_ts(self.created_at),
            "content_hash": self.content_hash,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "AgentManifest":
        return cls(
            agent_id=raw["agent_id"],
            version=raw["version"],
            model_id=raw["model_id"],
            prompt_template=raw["prompt_template"],
            policies=tuple(raw["policies"]),
            output_schema=tuple(
                FieldSpec(s["name"], s["type"], s.get("required", True))
                for s in raw["output_schema"]
            ),
            created_at=parse_ts(raw["created_at"]),
            content_hash=raw["content_hash"],
        )


class ManifestRegistry:
    """Stores manifests per agent with monotonically increasing versions.

    With dir_path set, every manifest also lands at <dir>/<agent>/<version>.json
    and is reloaded on construction, so a restart serves the same versions.
    """

    def __init__(self, clock: Clock, publisher=None, dir_path: str | None = None):
        self._clock = clock
        self._publisher = publisher
        self._dir = dir_path
        self._agents: dict[str, dict[int, AgentManifest]] = {}
        self._lock = threading.Lock()
        if dir_path:
            self._load()

    def _load(self) -> None:
        if not os.path.isdir(self._dir):
            return
        for agent_id in sorted(os.listdir(self._dir)):
            agent_dir = os.path.join(self._dir, agent_id)
            if not os.path.isdir(agent_dir):
                continue
            for name in sorted(os.listdir(agent_dir)):
                if not name.endswith(".json"):
                    continue
                with open(os.path.join(agent_dir, name), "r", encoding="utf-8") as fh:
                    manifest = AgentManifest.from_dict(json.load(fh))
                self._agents.setdefault(manifest.agent_id, {})[manifest.version] = manifest

    def _save(self, manifest: AgentManifest) -> None:
        if not self._dir:
            return
        agent_dir = os.path.join(self._dir, manifest.agent_id)
        os.makedirs(agent_dir, exist_ok=True)
        path = os.path.join(agent_dir, f"{manifest.version}.json")
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(canonical_json(manifest.to_dict()))
        os.replace(tmp, path)

    def submit(self, agent_id: str, model_id: str, prompt_template: str,
               policies, output_schema, expected_latest: int | None = None):
        """Returns (manifest, created). Identical content maps to its existing
        version; anything new gets latest + 1."""
        policies = tuple(policies)
        output_schema = tuple(output_schema)
        content_hash = AgentManifest.compute_hash(
            agent_id, model_id, prompt_template, policies, output_schema
        )
        with self._lock:
            versions = self._agents.setdefault(agent_id, {})
            latest = max(versions) if versions else 0
            if expected_latest is not None and expected_latest != latest:
                raise VersionConflict(
                    "registry moved underneath this submission",
                    agent_id=agent_id, expected=expected_latest, latest=latest,
                )
            for version in sorted(versions):
                if versions[version].content_hash == content_hash:
                    return versions[version], False
            manifest = AgentManifest(
                agent_id=agent_id,
                version=latest + 1,
                model_id=model_id,
                prompt_template=prompt_template,
                policies=policies,
                output_schema=output_schema,
                created_at=self._clock.now(),
                content_hash=content_hash,
            )
            versions[manifest.version] = manifest
            self._save(manifest)
        if self._publisher is not None:
            self._publisher.publish(
                "registry.updated",
                f"registry:{agent_id}",
                {
                    "agent_id": agent_id,
                    "version": manifest.version,
                    "content_hash": content_hash,
                },
            )
        return manifest, True

    def get(self, agent_id: str, version: int | None = None) -> AgentManifest:
        with self._lock:
            versions = self._agents.get(agent_id)
            if not versions:
                raise NotFound("unknown agent", agent_id=agent_id)
            if version is None:
                version = max(versions)
            manifest = versions.get(version)
            if manifest is None:
                raise NotFound("unknown manifest version", agent_id=agent_id, version=version)
            return manifest

    def has(self, agent_id: str) -> bool:
        with self._lock:
            return bool(self._agents.get(agent_id))

    def versions(self, agent_id: str) -> list:
        with self._lock:
            return sorted(self._agents.get(agent_id, {}))

    def agents(self) -> list:
        with self._lock:
            return sorted(self._agents)
