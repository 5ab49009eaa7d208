"""Small shared helpers."""

from __future__ import annotations


def stable_hash(text: str) -> int:
    """Deterministic 32-bit FNV-1a hash (process-independent, unlike hash())."""

    h = 2166136261
    for ch in text.encode("utf-8"):
        h = (h ^ ch) * 16777619 % (1 << 32)
    return h
