"""Deterministic derivation of per-task RNG seeds.

Seeds are derived by hashing ``(base seed, context parts...)`` with SHA-256,
so trial t of experiment e always sees the same stream regardless of thread
count, scheduling order, or PYTHONHASHSEED.
"""

from __future__ import annotations

import hashlib


def derive_seed(seed: int, *parts: object) -> int:
    """A 63-bit seed determined by the base seed and the context parts."""
    payload = repr((int(seed),) + tuple(parts)).encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "big") >> 1
