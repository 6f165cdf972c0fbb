"""Clinical summaries and use-case policies.

A ClinicalSummary is the structured output a generation agent produces for
review. Policies are small named predicates over a summary; they exist so the
workflow can state things like "a summary must include a diagnosis" as data
rather than scattered if-statements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..serialization import canonical_json, sha256_hex


@dataclass(frozen=True)
class AgentRef:
    agent_id: str
    version: int

    def label(self) -> str:
        return f"{self.agent_id}@{self.version}"


@dataclass(frozen=True)
class ClinicalSummary:
    diagnosis: str
    findings: tuple[str, ...]
    plan: str
    codes: tuple[str, ...]
    produced_by: AgentRef
    model_id: str
    content_hash: str = ""

    @classmethod
    def create(cls, diagnosis, findings, plan, codes, produced_by, model_id) -> "ClinicalSummary":
        summary = cls(
            diagnosis=diagnosis,
            findings=tuple(findings),
            plan=plan,
            codes=tuple(codes),
            produced_by=produced_by,
            model_id=model_id,
        )
        return ClinicalSummary(
            **{**summary.__dict__, "content_hash": summary.compute_hash()}
        )

    def fields(self) -> dict:
        return {
            "diagnosis": self.diagnosis,
            "findings": list(self.findings),
            "plan": self.plan,
            "codes": list(self.codes),
        }

    def compute_hash(self) -> str:
        material = dict(self.fields())
        material["produced_by"] = self.produced_by.label()
        material["model_id"] = self.model_id
        return sha256_hex(canonical_json(material))

    def verify_hash(self) -> bool:
        return self.content_hash == self.compute_hash()


def render_summary(summary: ClinicalSummary) -> str:
    """Deterministic human-readable rendering; this text is what reviewers see."""
    lines = [f"Diagnosis: {summary.diagnosis}".rstrip()]
    for item in summary.findings:
        lines.append(f"- {item}")
    lines.append(f"Plan: {summary.plan}")
    if summary.codes:
        lines.append("Codes: " + ", ".join(summary.codes))
    return "\n".join(lines)


@dataclass(frozen=True)
class PolicyVerdict:
    policy_id: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class UseCasePolicy:
    policy_id: str
    description: str
    check: Callable[[ClinicalSummary], bool] = field(compare=False)


def evaluate_policies(
    summary: ClinicalSummary, policies: list[UseCasePolicy]
) -> list[PolicyVerdict]:
    """Evaluate every policy; order and count of verdicts mirror the input."""
    if not policies:
        raise ValueError("evaluate_policies requires a non-empty policy list")
    verdicts = []
    for policy in policies:
        try:
            passed = bool(policy.check(summary))
            detail = "" if passed else policy.description
        except Exception as exc:  # a broken policy is a failed policy, not a crash
            passed, detail = False, f"policy raised: {exc}"
        verdicts.append(PolicyVerdict(policy.policy_id, passed, detail))
    return verdicts


def default_policies() -> list[UseCasePolicy]:
    return [
        UseCasePolicy(
            policy_id="diagnosis_required",
            description="summary must state a diagnosis",
            check=lambda s: bool(s.diagnosis.strip()),
        )
    ]
