"""Writer for the PCXE token-embedding container.

The layout is the one the extraction pipeline's file-backed embedder
reads: a fixed header (magic, version, dimension, record count), then one
record per sentence holding the uid and a float32 row per token. All
integers are little-endian; payload floats are little-endian float32, so
the bytes written here are exactly the vectors a loader hands back.
"""

from __future__ import annotations

import struct
from typing import Iterable

import numpy as np

from encoder_export.errors import ExportError

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
                raise ExportError(
                    f"record {uid!r}: expected shape (m, {dim}), got {arr.shape}"
                )
            uid_bytes = uid.encode("utf-8")
            if len(uid_bytes) > 0xFFFF:
                raise ExportError(f"uid too long: {uid!r}")
            handle.write(_UID_LEN.pack(len(uid_bytes)))
            handle.write(uid_bytes)
            handle.write(_ROW_COUNT.pack(arr.shape[0]))
            handle.write(arr.tobytes())
