"""Pluggable contextual-representation providers.

Two embedders share one interface (``dim``, ``encode_tokens``,
``encode_span``): a deterministic feature-hashing embedder for desk-scale
training, and a file-backed loader for token vectors exported from any
pretrained encoder. Span vectors are pooled from token rows the same way
in both: (mean over the span, start row, end row), concatenated.

The hashing hot loop lives in a compiled kernel when the extension built;
otherwise the pure-Python reference kernel is used. The choice happens
once at import and is reported through HASH_BACKEND.
"""

from __future__ import annotations

import struct
from typing import IO, Iterable

import numpy as np

from picospan.corpus import Sentence
from picospan.errors import EmbeddingError

try:
    from picospan._hashkernel import hash_tokens as _hash_tokens

    HASH_BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on the build
    from picospan.hashing import hash_tokens as _hash_tokens

    HASH_BACKEND = "python"


def span_vector(token_matrix: np.ndarray, start: int, end: int) -> np.ndarray:
    """Pool token rows into a span vector of dimension 3 * dim.

    Layout: [mean of rows start..end, row at start, row at end]. The mean
    carries span content; the boundary rows keep the information the
    localization stage keyed on.
    """
    n = token_matrix.shape[0]
    if not (0 <= start <= end < n):
        raise EmbeddingError(f"span ({start}, {end}) out of range for {n} tokens")
    rows = np.asarray(token_matrix, dtype=np.float64)
    segment = rows[start : end + 1]
    return np.concatenate([segment.mean(axis=0), rows[start], rows[end]])


class HashedEmbedder:
    """Deterministic signed-hash token embedder; pure function of its config.

    Each row combines the token surface with (optionally) the left/right
    neighbor surfaces, hashed into ``dim`` buckets with +/-1 signs, then
    L2-normalized. A reserved bias bucket keeps every row nonzero, so the
    normalization is always well defined.
    """

    def __init__(self, dim: int = 256, seed: int = 0, context: bool = True):
        if dim < 2:
            raise EmbeddingError(f"dim must be at least 2, got {dim}")
        if seed < 0:
            raise EmbeddingError(f"seed must be non-negative, got {seed}")
        self.dim = dim
        self.seed = seed
        self.context = context

    @property
    def span_dim(self) -> int:
        return 3 * self.dim

    def encode_tokens(self, sentence: Sentence) -> np.ndarray:
        if len(sentence.tokens) == 0:
            raise EmbeddingError(f"sentence {sentence.uid!r} has no tokens")
        raw = _hash_tokens(list(sentence.tokens), self.dim, self.seed, self.context)
        norms = np.linalg.norm(raw, axis=1, keepdims=True)
        return raw / norms

    def encode_span(self, sentence: Sentence, start: int, end: int) -> np.ndarray:
        return span_vector(self.encode_tokens(sentence), start, end)

    def config(self) -> dict:
        return {
            "kind": "hashed",
            "dim": self.dim,
            "seed": self.seed,
            "context": self.context,
        }


class FileBackedEmbedder:
    """Serves token vectors exported to a PCXE file, keyed by sentence uid."""

    def __init__(self, path: str):
        self.path = path
        self.dim, self._records = read_pcxe(path)

    @property
    def span_dim(self) -> int:
        return 3 * self.dim

    def encode_tokens(self, sentence: Sentence) -> np.ndarray:
        rows = self._records.get(sentence.uid)
        if rows is None:
            raise EmbeddingError(f"unknown sentence uid: {sentence.uid!r}")
        if rows.shape[0] != len(sentence.tokens):
            raise EmbeddingError(
                f"sentence {sentence.uid!r}: embedding file has {rows.shape[0]} "
                f"rows but the sentence has {len(sentence.tokens)} tokens"
            )
        return rows

    def encode_span(self, sentence: Sentence, start: int, end: int) -> np.ndarray:
        return span_vector(self.encode_tokens(sentence), start, end)

    def uids(self) -> set[str]:
        return set(self._records)

    def config(self) -> dict:
        return {"kind": "pcxe", "dim": self.dim}


# ---------------------------------------------------------------------------
# PCXE container: uid -> per-token float32 rows
# ---------------------------------------------------------------------------

PCXE_MAGIC = b"PCXE"
PCXE_VERSION = 1

_HEADER = struct.Struct("<4sIII")  # magic, version, dim, record count
_UID_LEN = struct.Struct("<H")
_ROW_COUNT = struct.Struct("<I")


def write_pcxe(path: str, dim: int, records: Iterable[tuple[str, np.ndarray]]) -> None:
    """Write (uid, rows) records; rows must be shape (m, dim) float32."""
    items = list(records)
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(PCXE_MAGIC, PCXE_VERSION, dim, len(items)))
        for uid, rows in items:
            arr = np.ascontiguousarray(rows, dtype="<f4")
            if arr.ndim != 2 or arr.shape[1] != dim:
                raise EmbeddingError(
                    f"record {uid!r}: expected shape (m, {dim}), got {arr.shape}"
                )
            uid_bytes = uid.encode("utf-8")
            if len(uid_bytes) > 0xFFFF:
                raise EmbeddingError(f"uid too long: {uid!r}")
            handle.write(_UID_LEN.pack(len(uid_bytes)))
            handle.write(uid_bytes)
            handle.write(_ROW_COUNT.pack(arr.shape[0]))
            handle.write(arr.tobytes())


def _read_exact(handle: IO[bytes], n: int, what: str) -> bytes:
    data = handle.read(n)
    if len(data) != n:
        raise EmbeddingError(f"truncated PCXE file while reading {what}")
    return data


def read_pcxe(path: str) -> tuple[int, dict[str, np.ndarray]]:
    """Load a PCXE file; float32 payloads are returned bit-exactly."""
    with open(path, "rb") as handle:
        magic, version, dim, count = _HEADER.unpack(
            _read_exact(handle, _HEADER.size, "header")
        )
        if magic != PCXE_MAGIC:
            raise EmbeddingError(f"not a PCXE file: bad magic {magic!r}")
        if version != PCXE_VERSION:
            raise EmbeddingError(f"unsupported PCXE version {version}")
        records: dict[str, np.ndarray] = {}
        for _ in range(count):
            (uid_len,) = _UID_LEN.unpack(_read_exact(handle, _UID_LEN.size, "uid length"))
            uid = _read_exact(handle, uid_len, "uid").decode("utf-8")
            (m,) = _ROW_COUNT.unpack(_read_exact(handle, _ROW_COUNT.size, "row count"))
            payload = _read_exact(handle, 4 * m * dim, f"rows of {uid!r}")
            rows = np.frombuffer(payload, dtype="<f4").reshape(m, dim)
            records[uid] = rows
    return dim, records
