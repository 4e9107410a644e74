"""Canonical serialization and stable hashing shared across the studio.

Everything that claims byte-stable output (registry versions, program and
scene content hashes, cassette fingerprints, the mock responder) hashes
through these helpers so the canonical form is defined in one place.
"""

from __future__ import annotations

import hashlib
import json


def canonical_json_bytes(obj) -> bytes:
    """Serialize a plain (json-compatible) object to canonical bytes.

    Keys sorted, no whitespace, ASCII only. List order is preserved, which is
    how ordered structures (registry catalogs, program calls) stay ordered.
    """
    return json.dumps(obj, ensure_ascii=True, separators=(",", ":"), sort_keys=True).encode("utf-8")


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def stable_u64(text: str) -> int:
    """First 8 bytes of sha256 as an unsigned int. Platform/session stable."""
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def stable_unit(text: str) -> float:
    """Deterministic value in [0, 1) derived from text."""
    return stable_u64(text) / 2.0**64
