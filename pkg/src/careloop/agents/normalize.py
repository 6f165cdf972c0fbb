"""Inbound message normalization: casefold, strip punctuation, collapse spaces.

normalize_text is idempotent: applying it twice always equals applying it
once. An optional spelling corrector can be plugged in; the default is the
identity function.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Callable


class Channel(str, Enum):
    TEXT = "text"
    VOICE_TRANSCRIPT = "voice_transcript"
    FORM = "form"


@dataclass(frozen=True)
class NormalizedMessage:
    raw: str
    text: str
    channel: Channel
    received_at: datetime


_PUNCT_RE = re.compile(r"[^\w\s]", re.UNICODE)
_SPACE_RE = re.compile(r"\s+")


def normalize_text(raw: str, corrector: Callable[[str], str] | None = None) -> str:
    text = corrector(raw) if corrector is not None else raw
    text = text.casefold()
    text = _PUNCT_RE.sub(" ", text)
    text = _SPACE_RE.sub(" ", text).strip()
    return text


def normalize(
    raw: str,
    channel: Channel,
    received_at: datetime,
    corrector: Callable[[str], str] | None = None,
) -> NormalizedMessage:
    return NormalizedMessage(
        raw=raw,
        text=normalize_text(raw, corrector),
        channel=channel,
        received_at=received_at,
    )
