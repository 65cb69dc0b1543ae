"""Shared plumbing: reproducible timestamps and canonical config hashing."""

from __future__ import annotations

import hashlib
import json
import os
from datetime import datetime, timezone


def utc_now_iso() -> str:
    """Current UTC time in ISO-8601; honors SOURCE_DATE_EPOCH so runs that
    must be byte-reproducible can pin it."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        dt = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        dt = datetime.now(tz=timezone.utc)
    return dt.isoformat(timespec="seconds")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
