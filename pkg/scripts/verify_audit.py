#!/usr/bin/env python3
"""Standalone audit-chain verifier.

Recomputes the hash chain of an audit log (and optionally an event log) using
nothing but the stdlib, so an external party can check tamper evidence without
installing or trusting the service code.

Record format, one JSON object per line:
  record_hash = sha256(prev_hash + canonical(record without record_hash))
  canonical   = json.dumps(..., sort_keys=True, separators=(",", ":"),
                ensure_ascii=False)
  prev_hash of record 0 = 64 zeros; seq must equal the line index.

Usage: verify_audit.py AUDIT_FILE [EVENT_FILE]
Exit status 0 when every chain verifies, 1 otherwise.
"""

import hashlib
import json
import sys


GENESIS = "0" * 64


def canonical(fields: dict) -> str:
    return json.dumps(fields, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def verify_chain(path: str, hash_field: str, seq_field: str | None):
    """Returns (ok, first_bad_index). A missing or empty file verifies."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except FileNotFoundError:
        return True, None
    lines = blob.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    prev = GENESIS
    for index, line in enumerate(lines):
        try:
            record = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return False, index
        if not isinstance(record, dict):
            return False, index
        stored = record.pop(hash_field, None)
        if not isinstance(stored, str) or len(stored) != 64:
            return False, index
        if seq_field is not None and record.get(seq_field) != index:
            return False, index
        if "prev_hash" in record and record["prev_hash"] != prev:
            return False, index
        digest = hashlib.sha256((prev + canonical(record)).encode("utf-8")).hexdigest()
        if digest != stored:
            return False, index
        prev = stored
    return True, None


def main(argv):
    if len(argv) < 2 or len(argv) > 3:
        print(__doc__)
        return 2
    audit_ok, audit_bad = verify_chain(argv[1], "record_hash", "seq")
    report = {"audit": {"path": argv[1], "ok": audit_ok, "first_bad_seq": audit_bad}}
    all_ok = audit_ok
    if len(argv) == 3:
        events_ok, events_bad = verify_chain(argv[2], "chain_hash", None)
        report["events"] = {
            "path": argv[2], "ok": events_ok, "first_bad_line": events_bad,
        }
        all_ok = all_ok and events_ok
    print(json.dumps(report, indent=2))
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv))
