"""Delta + varint codec for sorted cell-id lists.

Used both for storage accounting and for the snapshot file: a sorted id
list is stored as unsigned LEB128 varints of consecutive deltas, the
first value encoded as-is.  Deterministic for a given set.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


def encode_varint(value: int) -> bytes:
    if value < 0:
        raise ValueError("varint values must be non-negative")
    out = bytearray()
    while True:
        b = value & 0x7F
        value >>= 7
        if value:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def decode_varint(buf: bytes, offset: int) -> tuple[int, int]:
    """(value, next_offset)."""
    result = 0
    shift = 0
    while True:
        b = buf[offset]
        offset += 1
        result |= (b & 0x7F) << shift
        if not b & 0x80:
            return result, offset
        shift += 7


def encode_cell_list(ids: Sequence[int]) -> bytes:
    """Delta-encode an ascending id list."""
    out = bytearray()
    prev = 0
    for cid in ids:
        if cid < prev:
            raise ValueError("cell ids must be sorted ascending and unique")
        out.extend(encode_varint(int(cid) - prev))
        prev = int(cid)
    return bytes(out)


def decode_cell_list(buf: bytes, offset: int, count: int) -> tuple[np.ndarray, int]:
    ids = np.empty(count, np.int32)
    prev = 0
    for i in range(count):
        delta, offset = decode_varint(buf, offset)
        prev += delta
        ids[i] = prev
    return ids, offset


def cell_list_nbytes(ids: Sequence[int]) -> int:
    """Encoded size of an ascending id list, without materializing it."""
    arr = np.asarray(ids, np.int64)
    if arr.size == 0:
        return 0
    deltas = np.diff(arr, prepend=0)
    if (deltas < 0).any():
        raise ValueError("cell ids must be sorted ascending and unique")
    # LEB128 length: one byte per started 7-bit group
    nbytes = np.ones(arr.size, np.int64)
    rest = deltas >> 7
    while rest.any():
        nbytes += rest > 0
        rest >>= 7
    return int(nbytes.sum())
