"""Consistency rules applied to generated summaries, with versioned updates.

Rule updates happen through the audit-and-reversioning path: an update must
cite an existing audit record, gets audited itself, and bumps the rule set
version by one.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from typing import Callable

from ..errors import UnknownAuditRef

_CODE_RE = re.compile(r"^[A-Z]\d{2}(\.\d{1,2})?$")


@dataclass(frozen=True)
class ConsistencyRule:
    rule_id: str
    description: str
    check: Callable[[dict], bool] = field(compare=False)


@dataclass(frozen=True)
class ConsistencyRuleSet:
    version: int
    rules: tuple[ConsistencyRule, ...]
    updated_by: str = "system"

    def evaluate(self, summary_fields: dict) -> list[dict]:
        """Returns one violation dict per failing rule; empty means consistent."""
        violations = []
        for rule in self.rules:
            try:
                ok = bool(rule.check(summary_fields))
            except Exception as exc:
                ok = False
                violations.append(
                    {"rule_id": rule.rule_id, "detail": f"rule raised: {exc}"}
                )
                continue
            if not ok:
                violations.append({"rule_id": rule.rule_id, "detail": rule.description})
        return violations


def default_rules() -> tuple[ConsistencyRule, ...]:
    return (
        ConsistencyRule(
            rule_id="diagnosis_present",
            description="diagnosis must be a non-empty text field",
            check=lambda f: bool(str(f.get("diagnosis", "")).strip()),
        ),
        ConsistencyRule(
            rule_id="plan_present_with_diagnosis",
            description="a diagnosed summary must carry a care plan",
            check=lambda f: not str(f.get("diagnosis", "")).strip()
            or bool(str(f.get("plan", "")).strip()),
        ),
        ConsistencyRule(
            rule_id="codes_well_formed",
            description="billing codes must look like letter + 2 digits (+ optional decimals)",
            check=lambda f: all(_CODE_RE.match(str(c)) for c in f.get("codes", [])),
        ),
    )


class RulesRegistry:
    def __init__(self, audit_log, publisher, initial: tuple[ConsistencyRule, ...] | None = None):
        self._audit = audit_log
        self._publisher = publisher
        self._current = ConsistencyRuleSet(version=1, rules=initial or default_rules())
        self._lock = threading.Lock()

    @property
    def current(self) -> ConsistencyRuleSet:
        with self._lock:
            return self._current

    def update_rules(
        self, rules: tuple[ConsistencyRule, ...], audit_ref: int, updated_by: str
    ) -> ConsistencyRuleSet:
        if not self._audit.has_seq(audit_ref):
            raise UnknownAuditRef("cited audit record does not exist", seq=audit_ref)
        with self._lock:
            updated = ConsistencyRuleSet(
                version=self._current.version + 1,
                rules=tuple(rules),
                updated_by=updated_by,
            )
            self._current = updated
        record = self._audit.append(
            trace_id=f"rules:{updated.version}",
            reviewer_id=updated_by,
            action="RuleUpdated",
            detail={"version": updated.version, "cited_seq": audit_ref,
                    "rule_ids": [r.rule_id for r in rules]},
        )
        self._publisher.publish(
            "rules.updated",
            f"rules:{updated.version}",
            {"version": updated.version, "audit_seq": record.seq},
        )
        return updated
