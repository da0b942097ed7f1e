"""Pure-Python feature-hashing kernel.

Reference implementation of the signed token-hashing scheme; the compiled
kernel in ``picospan._hashkernel`` mirrors it bit for bit and is preferred
at import time when available. Keep the two in lockstep: the embedder test
suite asserts exact output equality.

Scheme: every token contributes a handful of string features (its own
surface and, when the context window is on, the left/right neighbor
surfaces). Each feature is FNV-1a-hashed together with a seed-derived
basis; the hash picks a bucket in [1, dim) and a +/-1 sign. Bucket 0 is
reserved for a constant bias so no row can be the zero vector.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

# Feature tags (single prefix byte) and neighbor sentinels.
_TAG_TOKEN = 0x54  # 'T'
_TAG_LEFT = 0x4C  # 'L'
_TAG_RIGHT = 0x52  # 'R'
_BOS = "\x02".encode("utf-8")
_EOS = "\x03".encode("utf-8")


def fnv1a64(data: bytes, state: int = _FNV_OFFSET) -> int:
    """64-bit FNV-1a over ``data``, starting from ``state``."""
    h = state
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def seed_state(seed: int) -> int:
    """Fold a non-negative seed into the FNV starting state."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return fnv1a64(seed.to_bytes(8, "little"))


def hash_tokens(tokens: list[str], dim: int, seed: int, context: bool) -> np.ndarray:
    """Unnormalized signed-hash rows, one per token, shape (len(tokens), dim).

    Entries are exact small integers (sums of +/-1 and the bias), so the
    caller can normalize however it likes without reproducibility concerns.
    """
    if dim < 2:
        raise ValueError(f"dim must be at least 2, got {dim}")
    base = seed_state(seed)
    n = len(tokens)
    encoded = [tok.encode("utf-8") for tok in tokens]
    rows = np.zeros((n, dim), dtype=np.float64)
    buckets = dim - 1
    for i in range(n):
        features = [(_TAG_TOKEN, encoded[i])]
        if context:
            features.append((_TAG_LEFT, encoded[i - 1] if i > 0 else _BOS))
            features.append((_TAG_RIGHT, encoded[i + 1] if i + 1 < n else _EOS))
        row = rows[i]
        row[0] += 1.0
        for tag, data in features:
            h = fnv1a64(data, ((base ^ tag) * _FNV_PRIME) & _MASK64)
            idx = 1 + (h % buckets)
            row[idx] += 1.0 if (h >> 63) == 0 else -1.0
    return rows
