"""Anamnesis questionnaire: field specs, validators, completion logic."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import yaml

from ..errors import ConfigError, InvalidAnswer


def _validate_non_empty(text: str):
    value = text.strip()
    if not value:
        raise InvalidAnswer("an answer is required")
    return value


def _make_int_range(lo: int, hi: int):
    def _validate(text: str):
        raw = text.strip()
        try:
            value = int(raw)
        except ValueError:
            raise InvalidAnswer(f"expected a whole number between {lo} and {hi}")
        if not lo <= value <= hi:
            raise InvalidAnswer(f"expected a number between {lo} and {hi}")
        return value

    return _validate


def _build_validator(spec: str):
    if spec == "non_empty":
        return _validate_non_empty
    if spec.startswith("int_range:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError("bad int_range validator", spec=spec)
        return _make_int_range(int(parts[1]), int(parts[2]))
    raise ConfigError("unknown validator", spec=spec)


@dataclass(frozen=True)
class QuestionSpec:
    field_id: str
    prompt: str
    validator_spec: str

    def validate(self, answer: str):
        """Returns the parsed value or raises InvalidAnswer."""
        return _build_validator(self.validator_spec)(answer)


class Questionnaire:
    def __init__(self, fields: list[QuestionSpec]):
        if not fields:
            raise ConfigError("questionnaire needs at least one field")
        seen = set()
        for f in fields:
            if f.field_id in seen:
                raise ConfigError("duplicate questionnaire field", field=f.field_id)
            seen.add(f.field_id)
        self.fields = list(fields)

    def __len__(self) -> int:
        return len(self.fields)

    def field_at(self, answered_count: int) -> QuestionSpec | None:
        if answered_count >= len(self.fields):
            return None
        return self.fields[answered_count]

    def is_complete(self, answered_count: int) -> bool:
        return answered_count >= len(self.fields)


def load_default_questionnaire() -> Questionnaire:
    raw = resources.files("careloop.agents").joinpath("data/anamnesis.yaml").read_text("utf-8")
    parsed = yaml.safe_load(raw)
    fields = [
        QuestionSpec(
            field_id=item["field_id"],
            prompt=item["prompt"],
            validator_spec=item["validator"],
        )
        for item in parsed["fields"]
    ]
    return Questionnaire(fields)
