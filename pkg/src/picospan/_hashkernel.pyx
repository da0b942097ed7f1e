# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled feature-hashing kernel; mirrors picospan.hashing exactly.

Any change to the hashing scheme must be made in both files. The test
suite compares the two kernels entry for entry.
"""

from libc.stdint cimport uint64_t

import numpy as np

cdef uint64_t FNV_OFFSET = <uint64_t>0xCBF29CE484222325
cdef uint64_t FNV_PRIME = <uint64_t>0x100000001B3

cdef int TAG_TOKEN = 0x54
cdef int TAG_LEFT = 0x4C
cdef int TAG_RIGHT = 0x52

cdef bytes BOS = b"\x02"
cdef bytes EOS = b"\x03"


cdef inline uint64_t _fnv1a(const unsigned char* data, Py_ssize_t n, uint64_t h):
    cdef Py_ssize_t i
    for i in range(n):
        h ^= data[i]
        h *= FNV_PRIME
    return h


cdef inline void _add_feature(double[:] row, bytes data, uint64_t base,
                              int tag, uint64_t buckets):
    cdef uint64_t h = _fnv1a(<const unsigned char*>data, len(data),
                             (base ^ <uint64_t>tag) * FNV_PRIME)
    cdef uint64_t idx = 1 + (h % buckets)
    if (h >> 63) == 0:
        row[idx] += 1.0
    else:
        row[idx] -= 1.0


def hash_tokens(list tokens, int dim, seed, bint context):
    """Drop-in replacement for picospan.hashing.hash_tokens."""
    if dim < 2:
        raise ValueError(f"dim must be at least 2, got {dim}")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    cdef Py_ssize_t n = len(tokens)
    cdef bytes seed_bytes = int(seed).to_bytes(8, "little")
    cdef uint64_t base = _fnv1a(<const unsigned char*>seed_bytes, 8, FNV_OFFSET)
    cdef uint64_t buckets = <uint64_t>(dim - 1)

    encoded = [tok.encode("utf-8") for tok in tokens]
    rows_arr = np.zeros((n, dim), dtype=np.float64)
    cdef double[:, ::1] rows = rows_arr
    cdef Py_ssize_t i
    for i in range(n):
        rows[i, 0] += 1.0
        _add_feature(rows[i], <bytes>encoded[i], base, TAG_TOKEN, buckets)
        if context:
            _add_feature(rows[i], <bytes>encoded[i - 1] if i > 0 else BOS,
                         base, TAG_LEFT, buckets)
            _add_feature(rows[i], <bytes>encoded[i + 1] if i + 1 < n else EOS,
                         base, TAG_RIGHT, buckets)
    return rows_arr
