"""Elastic (stop-bit varint), zigzag/delta and dictionary codecs.

Elastic layout: the value is cut into 7-bit groups, most significant group
first, no leading zero group.  Every byte but the last has its MSB clear;
the last byte carries the stop bit::

    12  -> 8c
    300 -> 02 ac

These byte layouts are the wire format of every integer in an archive.
"""

from __future__ import annotations

from itertools import accumulate
from typing import Iterable, Sequence

import numpy as np

from .errors import MalformedBlob, UnterminatedVarint, VarintOverflow

MAX_ELASTIC = (1 << 64) - 1
MAX_DELTA_VALUE = (1 << 63) - 1
MAX_ELASTIC_BYTES = 10

_TABLE_SIZE = 1 << 14


def _encode_slow(v: int) -> bytes:
    out = bytearray((0x80 | (v & 0x7F),))
    v >>= 7
    while v:
        out.append(v & 0x7F)
        v >>= 7
    out.reverse()
    return bytes(out)


_TABLE = [_encode_slow(v) for v in range(_TABLE_SIZE)]


def elastic_encode(v: int) -> bytes:
    if 0 <= v < _TABLE_SIZE:
        return _TABLE[v]
    if v < 0 or v > MAX_ELASTIC:
        raise ValueError(f"elastic value out of range: {v}")
    return _encode_slow(v)


def elastic_len(v: int) -> int:
    return max(1, -(-v.bit_length() // 7))


def elastic_decode(data: bytes, pos: int = 0) -> tuple[int, int]:
    """Decode one value at ``pos``; returns ``(value, new_pos)``."""
    v = 0
    end = len(data)
    start = pos
    while True:
        if pos >= end:
            raise UnterminatedVarint(f"unterminated varint at offset {start}")
        b = data[pos]
        pos += 1
        v = (v << 7) | (b & 0x7F)
        if b & 0x80:
            break
        if pos - start >= MAX_ELASTIC_BYTES:
            raise VarintOverflow(f"varint longer than {MAX_ELASTIC_BYTES} bytes at offset {start}")
    if v > MAX_ELASTIC:
        raise VarintOverflow(f"varint exceeds 64 bits at offset {start}")
    return v, pos


_THRESHOLDS = [np.uint64(1 << (7 * k)) for k in range(1, 10)]


def _encode_array(z: np.ndarray) -> bytes:
    """Elastic-encode a uint64 array."""
    if not z.size:
        return b""
    width = np.ones(z.shape, np.int64)
    for t in _THRESHOLDS:
        above = z >= t
        if not above.any():
            break
        width += above
    ends = np.cumsum(width) - 1
    out = np.zeros(int(ends[-1]) + 1, np.uint8)
    for k in range(int(width.max())):
        sel = width > k
        out[ends[sel] - k] = (z[sel] >> np.uint64(7 * k)) & np.uint64(0x7F)
    out[ends] |= 0x80
    return out.tobytes()


def _as_array(values, dtype) -> np.ndarray:
    try:
        return np.asarray(values, dtype=dtype)
    except (OverflowError, TypeError) as e:
        raise ValueError(f"value out of range: {e}") from None


_SMALL = 64  # below this many values the plain loop beats numpy's call overhead


def elastic_encode_many(values: Iterable[int]) -> bytes:
    if not isinstance(values, (list, tuple, np.ndarray)) and not hasattr(values, "buffer_info"):
        values = list(values)
    if len(values) < _SMALL:
        return b"".join(map(elastic_encode, values))
    return _encode_array(_as_array(values, np.uint64))


def _decode_array(data: bytes, start: int, end: int) -> np.ndarray | None:
    """Vectorised decode to uint64, or None when the slow path must decide."""
    arr = np.frombuffer(data, dtype=np.uint8, count=end - start, offset=start)
    if not arr.size:
        return np.zeros(0, np.uint64)
    stops = arr >= 0x80
    if stops.all():
        return (arr & 0x7F).astype(np.uint64)
    if not stops[-1]:
        return None
    ends = np.flatnonzero(stops)
    starts = np.empty_like(ends)
    starts[0] = 0
    starts[1:] = ends[:-1] + 1
    width = int((ends - starts).max()) + 1
    if width > 9:  # 10-byte values need the overflow checks
        return None
    groups = (arr & 0x7F).astype(np.uint64)
    out = np.zeros(ends.size, np.uint64)
    for j in range(width):
        pos = starts + j
        live = pos <= ends
        out[live] = (out[live] << np.uint64(7)) | groups[pos[live]]
    return out


def elastic_decode_many(data: bytes, start: int = 0, end: int | None = None) -> list[int]:
    """Decode every value in ``data[start:end]``; the span must end on a stop byte."""
    if end is None:
        end = len(data)
    fast = _decode_array(data, start, end)
    if fast is not None:
        return fast.tolist()
    out = []
    append = out.append
    v = 0
    n = 0
    for b in data[start:end]:
        if b & 0x80:
            append((v << 7) | (b & 0x7F))
            v = 0
            n = 0
        else:
            v = (v << 7) | b
            n += 1
            if n >= MAX_ELASTIC_BYTES:
                raise VarintOverflow(f"varint longer than {MAX_ELASTIC_BYTES} bytes")
    if n:
        raise UnterminatedVarint("span ends inside a varint")
    if out and max(out) > MAX_ELASTIC:
        raise VarintOverflow("varint exceeds 64 bits")
    return out


def zigzag(d: int) -> int:
    return 2 * d if d >= 0 else -2 * d - 1


def unzigzag(z: int) -> int:
    return z >> 1 if not z & 1 else -((z + 1) >> 1)


def _delta_encode_small(values: Sequence[int]) -> bytes:
    out = []
    prev = 0
    for i, v in enumerate(values):
        if v < 0 or v > MAX_DELTA_VALUE:
            raise ValueError(f"delta input out of range: {v}")
        if i == 0:
            out.append(elastic_encode(v))
        else:
            d = v - prev
            out.append(elastic_encode(d + d if d >= 0 else -d - d - 1))
        prev = v
    return b"".join(out)


def delta_encode(values: Sequence[int]) -> bytes:
    """First value as-is, then zigzagged differences, all elastic-coded."""
    if len(values) < _SMALL:
        return _delta_encode_small(values)
    v = _as_array(values, np.int64)
    if not v.size:
        return b""
    if v.min() < 0:
        raise ValueError(f"delta input out of range: {int(v.min())}")
    d = np.empty_like(v)
    d[0] = v[0]
    d[1:] = np.diff(v)
    # zigzag in wrapping 64-bit arithmetic: (d << 1) ^ (d >> 63)
    z = ((d << 1) ^ (d >> 63)).view(np.uint64)
    z[0] = v[0]
    return _encode_array(z)


def delta_decode_array(data: bytes, start: int = 0, end: int | None = None) -> np.ndarray:
    """:func:`delta_decode` into an int64 array.

    Running sums wrap in two's complement, which is exact for well-formed
    input; corrupt input can come out negative and must be range-checked.
    """
    if end is None:
        end = len(data)
    z = _decode_array(data, start, end)
    if z is None:
        z = np.array(elastic_decode_many(data, start, end), dtype=np.uint64)
    if not z.size:
        return np.zeros(0, np.int64)
    d = (z >> np.uint64(1)).view(np.int64) ^ -(z & np.uint64(1)).view(np.int64)
    d[0] = z[:1].view(np.int64)[0]
    return np.cumsum(d)


def delta_decode(data: bytes, start: int = 0, end: int | None = None) -> list[int]:
    if end is None:
        end = len(data)
    z = _decode_array(data, start, end)
    if z is not None and (not z.size or z[0] <= MAX_DELTA_VALUE):
        # two's-complement wraparound in the running sum is exact for
        # well-formed input; corrupt input may come out out of range
        d = (z >> np.uint64(1)).astype(np.int64) ^ -(z & np.uint64(1)).astype(np.int64)
        if z.size:
            d[0] = int(z[0])
        return np.cumsum(d).tolist()
    raw = elastic_decode_many(data, start, end)
    if not raw:
        return raw
    first = raw[0]
    raw[0] = 0
    deltas = [z >> 1 if not z & 1 else -((z + 1) >> 1) for z in raw]
    deltas[0] = first
    return list(accumulate(deltas))


def encode_keys(keys: Iterable[bytes]) -> bytes:
    return b"".join(elastic_encode(len(k)) + k for k in keys)


def decode_keys(data: bytes, start: int = 0, end: int | None = None) -> list[bytes]:
    if end is None:
        end = len(data)
    keys = []
    pos = start
    try:
        while pos < end:
            n, pos = elastic_decode(data, pos)
            if pos + n > end:
                raise MalformedBlob(f"dictionary key at offset {pos} runs past end of blob")
            keys.append(bytes(data[pos:pos + n]))
            pos += n
    except UnterminatedVarint as e:
        raise MalformedBlob(f"truncated dictionary key length: {e}") from None
    return keys


def dict_encode(tokens: Iterable[bytes]) -> tuple[bytes, bytes]:
    """Ids are dense and assigned in first-appearance order."""
    ids_of: dict[bytes, int] = {}
    ids = []
    for t in tokens:
        i = ids_of.get(t)
        if i is None:
            i = ids_of[t] = len(ids_of)
        ids.append(i)
    return encode_keys(ids_of), elastic_encode_many(ids)


def dict_decode(keys_blob: bytes, ids_blob: bytes) -> list[bytes]:
    keys = decode_keys(keys_blob)
    ids = elastic_decode_many(ids_blob)
    try:
        return [keys[i] for i in ids]
    except IndexError:
        raise MalformedBlob("dictionary id out of range") from None
