"""Byte-exact inverse of the block encoder.

Nothing here classifies tokens or evaluates a regular expression: each
group's tokens are rendered straight from its signature (fixed widths,
run lengths, literal segments) and pulled in order as placeholders are met
in the modified log.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Iterator, Sequence

import numpy as np

from . import codecs
from .container import deserialize_signature_table
from .errors import (ArchiveError, CodecError, DecodeError, GroupExhausted, MalformedStream,
                     TrailingValues)
from .grouper import EncodedBlock, IndexEntry, Kind, Member, deserialize_index, value_layout
from .signatures import PatternSignature

_EXHAUSTED = object()


_DIGITS = np.frombuffer(b"0123456789", np.uint8)
SMALL_GROUP = 64  # below this, per-token formatting beats numpy's call overhead


def _run_format(runs: Sequence[int], literals: Sequence[bytes], numeric: Sequence[bool]) -> bytes:
    parts = [literals[0].replace(b"%", b"%%")]
    for r, lit, num in zip(runs, literals[1:], numeric):
        parts.append(b"%%0%dd" % r if num else b"%s")
        parts.append(lit.replace(b"%", b"%%"))
    return b"".join(parts)


def _digits_into(mat: np.ndarray, col: int, width: int, values: np.ndarray) -> None:
    """Write ``values`` zero-padded to ``width`` decimal digits into ``mat[:, col:col+width]``."""
    v = values.astype(np.uint64)
    ten = np.uint64(10)
    for j in range(col + width - 1, col - 1, -1):
        mat[:, j] = _DIGITS[v % ten]
        v //= ten


def _fixed_tokens(buf: bytes, width: int) -> Iterator[bytes]:
    return (buf[i:i + width] for i in range(0, len(buf), width))


def _bounds(values) -> tuple[int, int]:
    if isinstance(values, np.ndarray):
        return int(values.min()), int(values.max())
    return min(values), max(values)


def _check_range(values, width: int, what: str):
    if len(values):
        lo, hi = _bounds(values)
        if lo < 0 or hi >= 10 ** width:
            raise MalformedStream(f"{what}: decoded value does not fit its declared width")
    return values


def _raw_matrix(raw: bytes, width: int, count: int, what: str) -> np.ndarray:
    if len(raw) != width * count:
        raise MalformedStream(f"{what}: raw digit span has {len(raw)} bytes, expected {width * count}")
    return np.frombuffer(raw, np.uint8).reshape(count, width)


def _render_octets(cols: list[np.ndarray]) -> Iterator[bytes]:
    """Dotted quads without padding; token lengths vary, so offsets are explicit."""
    widths = [1 + (c >= 10) + (c >= 100) for c in cols]
    lens = widths[0] + widths[1] + widths[2] + widths[3] + 3
    ends = np.cumsum(lens)
    starts = ends - lens
    out = np.empty(int(ends[-1]) if ends.size else 0, np.uint8)
    pos = starts.copy()
    for k, (c, w) in enumerate(zip(cols, widths)):
        v = c.astype(np.uint64)
        for d in range(3):
            sel = w > d
            out[pos[sel] + w[sel] - 1 - d] = _DIGITS[v[sel] % np.uint64(10)]
            v //= np.uint64(10)
        pos += w
        if k < 3:
            out[pos] = 0x2E
            pos += 1
    return _spans(out.tobytes(), starts, ends)


def _spans(buf: bytes, starts: np.ndarray, ends: np.ndarray, step: int = 4096) -> Iterator[bytes]:
    # offsets become Python ints a slice at a time, not all at once
    for k in range(0, len(starts), step):
        for s, e in zip(starts[k:k + step].tolist(), ends[k:k + step].tolist()):
            yield buf[s:e]


def group_cursor(sig: PatternSignature, entries: Sequence[IndexEntry],
                 members: Sequence[bytes], what: str = "group") -> Iterator[bytes]:
    """Iterator over the reconstructed tokens of one group, in scan order.

    Fixed-width layouts are rendered for the whole group at once into a
    single byte matrix, one row per token.
    """
    kind, numeric = value_layout(sig)
    count = entries[0].count if entries else 0
    if any(e.count != count for e in entries):
        raise MalformedStream(f"{what}: index entries disagree on occurrence count")

    def span(e: IndexEntry, member: Member) -> bytes:
        if e.member is not member:
            raise MalformedStream(f"{what}: expected a span in {member.name}, got {e.member.name}")
        m = members[member]
        if e.offset + e.length > len(m):
            raise MalformedStream(f"{what}: span exceeds member {member.name}")
        return m[e.offset:e.offset + e.length]

    small = count < SMALL_GROUP

    def ints(e: IndexEntry) -> np.ndarray | list[int]:
        data = span(e, Member.NUMERIC)
        vals = codecs.delta_decode(data) if small else codecs.delta_decode_array(data)
        if len(vals) != count:
            raise MalformedStream(f"{what}: {len(vals)} values for {count} occurrences")
        return vals

    def expect(n: int) -> None:
        if len(entries) != n:
            raise MalformedStream(f"{what}: {len(entries)} index entries, layout needs {n}")

    if not entries:
        return iter(())
    if kind is Kind.RAW_DIGITS:
        expect(1)
        raw = span(entries[0], Member.RAW_DIGITS)
        _raw_matrix(raw, sig.length, count, what)
        return _fixed_tokens(bytes(raw), sig.length)
    if kind is Kind.DELTA_NUMERIC:
        expect(1)
        if small:
            vals = _check_range(ints(entries[0]), sig.length, what)
            return map((b"%%0%dd" % sig.length).__mod__, vals)
        mat = np.empty((count, sig.length), np.uint8)
        _digits_into(mat, 0, sig.length, _check_range(ints(entries[0]), sig.length, what))
        return _fixed_tokens(mat.tobytes(), sig.length)
    if kind is Kind.RUN_COLUMNS:
        expect(len(sig.runs))
        if small:
            cols = [_check_range(ints(e), r, what) if num
                    else _fixed_tokens(_raw_matrix(span(e, Member.RAW_DIGITS), r, count, what).tobytes(), r)
                    for e, r, num in zip(entries, sig.runs, numeric)]
            return map(_run_format(sig.runs, sig.literals, numeric).__mod__, zip(*cols))
        width = sum(sig.runs) + sum(map(len, sig.literals))
        mat = np.empty((count, width), np.uint8)
        col = 0
        for i, lit in enumerate(sig.literals):
            if lit:
                mat[:, col:col + len(lit)] = np.frombuffer(lit, np.uint8)
                col += len(lit)
            if i == len(sig.runs):
                break
            e, r = entries[i], sig.runs[i]
            if numeric[i]:
                _digits_into(mat, col, r, _check_range(ints(e), r, what))
            else:
                mat[:, col:col + r] = _raw_matrix(span(e, Member.RAW_DIGITS), r, count, what)
            col += r
        return _fixed_tokens(mat.tobytes(), width)
    if kind is Kind.OCTETS4:
        expect(4)
        cols = [ints(e) for e in entries]
        for c in cols:
            _check_range(c, 3, what)
            if len(c) and _bounds(c)[1] > 255:
                raise MalformedStream(f"{what}: octet above 255")
        if small:
            return map(b"%d.%d.%d.%d".__mod__, zip(*cols))
        return _render_octets(cols)
    expect(2)
    keys = codecs.decode_keys(span(entries[0], Member.DICT_KEYS))
    ids = codecs.elastic_decode_many(span(entries[1], Member.DICT_IDS))
    if len(ids) != count:
        raise MalformedStream(f"{what}: {len(ids)} ids for {count} occurrences")
    if ids and max(ids) >= len(keys):
        raise MalformedStream(f"{what}: dictionary id out of range")
    return map(keys.__getitem__, ids)


def reconstruct_token(sig_id: int, cursors: Sequence[Iterator[bytes]]) -> bytes:
    """Next token of group ``sig_id``; advances that group's cursor."""
    try:
        return next(cursors[sig_id])
    except StopIteration:
        raise GroupExhausted(f"group {sig_id} has no more values") from None


def build_cursors(block: EncodedBlock) -> list[Iterator[bytes]]:
    table = deserialize_signature_table(block.members[Member.SIGNATURES])
    by_sig: dict[int, list[IndexEntry]] = defaultdict(list)
    for e in deserialize_index(block.members[Member.INDEX]):
        if e.signature_id >= len(table):
            raise MalformedStream(f"index names unknown signature {e.signature_id}")
        by_sig[e.signature_id].append(e)
    return [group_cursor(sig, by_sig.get(i, ()), block.members, f"group {i}")
            for i, sig in enumerate(table)]


def decompress_block(payload: bytes | EncodedBlock) -> bytearray:
    """Rebuild the original bytes of one block."""
    try:
        return _decompress_block(payload)
    except (DecodeError, ArchiveError):
        raise
    except CodecError as e:
        raise MalformedStream(str(e)) from None
    except (ValueError, IndexError, OverflowError) as e:
        raise MalformedStream(f"corrupt block: {e}") from None


def _decompress_block(payload: bytes | EncodedBlock) -> bytearray:
    block = payload if isinstance(payload, EncodedBlock) else EncodedBlock.from_bytes(payload)
    cursors = build_cursors(block)
    ncur = len(cursors)
    mod = block.members[Member.MODIFIED_LOG]
    n = len(mod)
    out = bytearray()
    find = mod.find
    pos = 0
    while True:
        i = find(b"\x01", pos)
        if i < 0:
            out += mod[pos:]
            break
        out += mod[pos:i]
        if i + 1 >= n:
            raise MalformedStream(f"dangling sentinel at offset {i}")
        b = mod[i + 1]
        if b == 0:
            out.append(1)
            pos = i + 2
            continue
        if b & 0x80:
            sid = b & 0x7F
            pos = i + 2
        else:
            sid, pos = codecs.elastic_decode(mod, i + 1)
        if sid >= ncur:
            raise MalformedStream(f"placeholder names unknown signature {sid}")
        try:
            out += next(cursors[sid])
        except StopIteration:
            raise GroupExhausted(f"group {sid} exhausted at offset {i}") from None
    for sid, cur in enumerate(cursors):
        if next(cur, _EXHAUSTED) is not _EXHAUSTED:
            raise TrailingValues(f"group {sid} has unconsumed values")
    lines = out.count(b"\n") + (1 if out and out[-1] != 0x0A else 0)
    if lines != block.line_count:
        raise MalformedStream(f"block decodes to {lines} lines, header says {block.line_count}")
    return out
