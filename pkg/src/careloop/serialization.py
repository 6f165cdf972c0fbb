"""Canonical serialization and hashing shared by the event log and the audit chain.

Every durable line in this system is the same shape: key-sorted JSON with no
insignificant whitespace, UTF-8, timestamps as RFC 3339 UTC with millisecond
precision. Hash chains are SHA-256 over prev_hash + canonical(fields).
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone

GENESIS_HASH = "0" * 64

_TS_FORMAT = "%Y-%m-%dT%H:%M:%S"


def canonical_json(value) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(data: str | bytes) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def chain_digest(prev_hash: str, fields: dict) -> str:
    """Digest linking a record to its predecessor: H(prev_hash + canonical(fields))."""
    return sha256_hex(prev_hash + canonical_json(fields))


def format_ts(dt: datetime) -> str:
    """RFC 3339 UTC with exactly millisecond precision, e.g. 2024-10-01T08:00:00.001Z."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    return dt.strftime(_TS_FORMAT) + ".%03dZ" % (dt.microsecond // 1000)


def parse_ts(raw: str) -> datetime:
    return datetime.strptime(raw, _TS_FORMAT + ".%fZ").replace(tzinfo=timezone.utc)
