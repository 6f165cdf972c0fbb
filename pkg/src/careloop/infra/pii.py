"""Regex PII scanner with leftmost-longest, non-overlapping redaction.

Default patterns cover emails, Brazilian-style phone numbers and 11-digit
national ids (formatted 123.456.789-09 or bare). Replacement tokens contain
nothing any configured pattern can match, so redaction is idempotent and a
re-scan of redacted text always comes back clean.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import ConfigError


@dataclass(frozen=True)
class PiiPattern:
    name: str
    regex: str
    replacement: str
    compiled: re.Pattern = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "compiled", re.compile(self.regex))


@dataclass(frozen=True)
class Finding:
    pattern_name: str
    start: int
    end: int
    value: str


def default_patterns() -> list[PiiPattern]:
    return [
        PiiPattern(
            name="Email",
            regex=r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}",
            replacement="[EMAIL]",
        ),
        # Optional +55, optional 2-digit area code, 4-5 digit prefix, 4 digit
        # line number. Digit lookarounds stop partial matches inside longer
        # digit runs (an unseparated 11-digit run is the national id's job).
        PiiPattern(
            name="Phone",
            regex=r"(?<!\d)(?:\+?55[\s.-]?)?(?:\(?\d{2}\)?[\s.-])?\d{4,5}[\s.-]?\d{4}(?!\d)",
            replacement="[PHONE]",
        ),
        PiiPattern(
            name="NationalId11",
            regex=r"(?<!\d)(?:\d{3}\.\d{3}\.\d{3}-\d{2}|\d{11})(?!\d)",
            replacement="[ID]",
        ),
    ]


class RegexPiiScanner:
    def __init__(self, patterns: list[PiiPattern] | None = None):
        self._patterns = list(patterns) if patterns is not None else default_patterns()
        for pattern in self._patterns:
            for other in self._patterns:
                if other.compiled.search(pattern.replacement):
                    raise ConfigError(
                        "replacement token is itself matchable",
                        pattern=pattern.name,
                        matched_by=other.name,
                    )

    def scan(self, text: str) -> list[Finding]:
        """All findings after leftmost-longest non-overlapping selection."""
        candidates: list[tuple[int, int, int, Finding]] = []
        for idx, pattern in enumerate(self._patterns):
            for match in pattern.compiled.finditer(text):
                finding = Finding(pattern.name, match.start(), match.end(), match.group())
                candidates.append((match.start(), -(match.end() - match.start()), idx, finding))
        candidates.sort(key=lambda item: item[:3])
        selected: list[Finding] = []
        cursor = 0
        for start, _neg_len, _idx, finding in candidates:
            if start >= cursor:
                selected.append(finding)
                cursor = finding.end
        return selected

    def redact(self, text: str) -> str:
        findings = self.scan(text)
        if not findings:
            return text
        replacements = {p.name: p.replacement for p in self._patterns}
        out, cursor = [], 0
        for finding in findings:
            out.append(text[cursor:finding.start])
            out.append(replacements[finding.pattern_name])
            cursor = finding.end
        out.append(text[cursor:])
        return "".join(out)
