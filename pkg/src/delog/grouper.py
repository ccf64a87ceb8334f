"""Token groups, per-family member merging and the modified-log stream.

A block is encoded in one pass over the scanner output.  Keywords and
delimiters stay in the modified log verbatim; every other token is replaced
by ``0x01 + elastic(signature_id)`` and its value is appended to the group
of that signature.  A literal ``0x01`` byte is written as ``0x01 0x00``,
which no placeholder can start with because a minimal elastic encoding never
begins with a zero byte.
"""

from __future__ import annotations

import enum
from array import array
from dataclasses import dataclass, field
from typing import Sequence

from . import codecs
from .codecs import elastic_encode
from .scanner import F_DIGIT, F_HIGH, F_LETTER, F_SPECIAL, scan_chunks
from .signatures import (BUILTIN_RULES, MAX_INT_DIGITS, Category, Features, Layout, Mode,
                         NamedPatternRule, PatternSignature, SignatureTable, canonical_octets,
                         signature_from_ident, split_runs)

SENTINEL = 0x01
_SENTINEL_B = b"\x01"
_ESCAPED = b"\x01\x00"


class Member(enum.IntEnum):
    MODIFIED_LOG = 0
    SIGNATURES = 1
    INDEX = 2
    NUMERIC = 3
    DICT_KEYS = 4
    DICT_IDS = 5
    RAW_DIGITS = 6


MEMBER_COUNT = len(Member)


class Kind(enum.IntEnum):
    RAW_DIGITS = 0
    DELTA_NUMERIC = 1
    RUN_COLUMNS = 2
    DICTIONARY = 3
    OCTETS4 = 4


def escape(data: bytes) -> bytes:
    if _SENTINEL_B in data:
        return data.replace(_SENTINEL_B, _ESCAPED)
    return data


def unescape(data: bytes) -> bytes:
    """Inverse of :func:`escape` for streams without placeholders."""
    if _SENTINEL_B not in data:
        return data
    out = bytearray()
    pos = 0
    while True:
        i = data.find(_SENTINEL_B, pos)
        if i < 0:
            out += data[pos:]
            return bytes(out)
        if i + 1 >= len(data) or data[i + 1] != 0:
            raise ValueError(f"unescaped sentinel at offset {i}")
        out += data[pos:i + 1]
        pos = i + 2


def placeholder(sig_id: int) -> bytes:
    return _SENTINEL_B + elastic_encode(sig_id)


def value_layout(sig: PatternSignature) -> tuple[Kind, tuple[bool, ...]]:
    """Group kind plus, for run columns, which columns hold integers (False = raw digits)."""
    c = sig.category
    if c is Category.SHORT_NUMERIC:
        return Kind.RAW_DIGITS, ()
    if c is Category.LONG_NUMERIC:
        return (Kind.DELTA_NUMERIC if sig.length <= MAX_INT_DIGITS else Kind.RAW_DIGITS), ()
    if c is Category.COMPLEX_NUMERIC or (c is Category.NAMED and sig.layout is Layout.FIXED_RUNS):
        return Kind.RUN_COLUMNS, tuple(r <= MAX_INT_DIGITS for r in sig.runs)
    if c is Category.NAMED:
        return Kind.OCTETS4, ()
    return Kind.DICTIONARY, ()


# ---------------------------------------------------------------------------
# groups

class TokenGroup:
    kind: Kind
    __slots__ = ("signature_id", "count")

    def __init__(self, signature_id: int):
        self.signature_id = signature_id
        self.count = 0

    def encode(self) -> list[tuple[Member, bytes]]:
        raise NotImplementedError


class RawDigitsGroup(TokenGroup):
    kind = Kind.RAW_DIGITS
    __slots__ = ("buf",)

    def __init__(self, signature_id: int):
        super().__init__(signature_id)
        self.buf = bytearray()

    def add(self, token: bytes) -> None:
        self.buf += token
        self.count += 1

    def encode(self):
        return [(Member.RAW_DIGITS, bytes(self.buf))]


class DeltaGroup(TokenGroup):
    kind = Kind.DELTA_NUMERIC
    __slots__ = ("values",)

    def __init__(self, signature_id: int):
        super().__init__(signature_id)
        self.values = array("q")

    def add(self, token: bytes) -> None:
        self.values.append(int(token))
        self.count += 1

    def encode(self):
        return [(Member.NUMERIC, codecs.delta_encode(self.values))]


class RunColumnsGroup(TokenGroup):
    """One column per digit run; runs wider than 18 digits are kept as raw bytes."""

    kind = Kind.RUN_COLUMNS
    __slots__ = ("numeric", "columns")

    def __init__(self, signature_id: int, numeric: Sequence[bool]):
        super().__init__(signature_id)
        self.numeric = tuple(numeric)
        self.columns = [array("q") if n else bytearray() for n in numeric]

    def add_runs(self, runs: Sequence[bytes]) -> None:
        for col, is_num, r in zip(self.columns, self.numeric, runs):
            if is_num:
                col.append(int(r))
            else:
                col += r
        self.count += 1

    def add(self, token: bytes) -> None:
        self.add_runs(split_runs(token)[0])

    def encode(self):
        return [(Member.NUMERIC, codecs.delta_encode(c)) if n else (Member.RAW_DIGITS, bytes(c))
                for c, n in zip(self.columns, self.numeric)]


class Octets4Group(TokenGroup):
    kind = Kind.OCTETS4
    __slots__ = ("columns",)

    def __init__(self, signature_id: int):
        super().__init__(signature_id)
        self.columns = [array("q") for _ in range(4)]

    def add_octets(self, octets: Sequence[int]) -> None:
        for col, v in zip(self.columns, octets):
            col.append(v)
        self.count += 1

    def add(self, token: bytes) -> None:
        self.add_octets([int(p) for p in token.split(b".")])

    def encode(self):
        return [(Member.NUMERIC, codecs.delta_encode(c)) for c in self.columns]


class DictionaryGroup(TokenGroup):
    kind = Kind.DICTIONARY
    __slots__ = ("ids_of", "ids")

    def __init__(self, signature_id: int):
        super().__init__(signature_id)
        self.ids_of: dict[bytes, int] = {}
        self.ids = array("L")

    def add(self, token: bytes) -> None:
        ids_of = self.ids_of
        i = ids_of.get(token)
        if i is None:
            i = ids_of[token] = len(ids_of)
        self.ids.append(i)
        self.count += 1

    def encode(self):
        return [(Member.DICT_KEYS, codecs.encode_keys(self.ids_of)),
                (Member.DICT_IDS, codecs.elastic_encode_many(self.ids))]


def new_group(signature_id: int, sig: PatternSignature) -> TokenGroup:
    kind, numeric = value_layout(sig)
    if kind is Kind.RAW_DIGITS:
        return RawDigitsGroup(signature_id)
    if kind is Kind.DELTA_NUMERIC:
        return DeltaGroup(signature_id)
    if kind is Kind.RUN_COLUMNS:
        return RunColumnsGroup(signature_id, numeric)
    if kind is Kind.OCTETS4:
        return Octets4Group(signature_id)
    return DictionaryGroup(signature_id)


def append(groups: dict[int, TokenGroup], sig_id: int, sig: PatternSignature, token: bytes) -> None:
    g = groups.get(sig_id)
    if g is None:
        g = groups[sig_id] = new_group(sig_id, sig)
    g.add(token)


# ---------------------------------------------------------------------------
# index and block assembly

@dataclass(frozen=True)
class IndexEntry:
    signature_id: int
    member: Member
    offset: int
    length: int
    count: int


def serialize_index(entries: Sequence[IndexEntry]) -> bytes:
    """An empty index serializes to no bytes at all."""
    if not entries:
        return b""
    out = [elastic_encode(len(entries))]
    for e in entries:
        out.append(elastic_encode(e.signature_id) + elastic_encode(int(e.member))
                   + elastic_encode(e.offset) + elastic_encode(e.length) + elastic_encode(e.count))
    return b"".join(out)


def deserialize_index(data: bytes) -> list[IndexEntry]:
    from .errors import MalformedBlob

    if not data:
        return []
    dec = codecs.elastic_decode
    n, pos = dec(data, 0)
    entries = []
    for _ in range(n):
        sid, pos = dec(data, pos)
        member, pos = dec(data, pos)
        off, pos = dec(data, pos)
        length, pos = dec(data, pos)
        count, pos = dec(data, pos)
        if member >= MEMBER_COUNT:
            raise MalformedBlob(f"index entry names member {member}")
        entries.append(IndexEntry(sid, Member(member), off, length, count))
    if pos != len(data):
        raise MalformedBlob("trailing bytes after index")
    return entries


@dataclass
class EncodedBlock:
    line_count: int
    members: list[bytes] = field(default_factory=lambda: [b""] * MEMBER_COUNT)

    def to_parts(self) -> list[bytes]:
        """Header then members; their concatenation is :meth:`to_bytes`."""
        head = [elastic_encode(self.line_count)]
        head.extend(elastic_encode(len(m)) for m in self.members)
        return [b"".join(head), *self.members]

    def to_bytes(self) -> bytes:
        return b"".join(self.to_parts())

    @classmethod
    def from_bytes(cls, payload: bytes) -> "EncodedBlock":
        from .errors import MalformedStream

        dec = codecs.elastic_decode
        line_count, pos = dec(payload, 0)
        lengths = []
        for _ in range(MEMBER_COUNT):
            n, pos = dec(payload, pos)
            lengths.append(n)
        if pos + sum(lengths) != len(payload):
            raise MalformedStream("member lengths do not partition the block payload")
        # zero-copy views; the modified log is the only member searched with find()
        view = memoryview(payload)
        members = []
        for n in lengths:
            members.append(view[pos:pos + n])
            pos += n
        members[Member.MODIFIED_LOG] = bytes(members[Member.MODIFIED_LOG])
        return cls(line_count, members)


def finalize_block(groups: dict[int, TokenGroup], table: SignatureTable,
                   modified: bytes | bytearray, line_count: int) -> EncodedBlock:
    """Encode and merge every group; ``groups`` is emptied on the way."""
    from .container import serialize_signature_table

    merged: list[list[bytes]] = [[] for _ in range(MEMBER_COUNT)]
    sizes = [0] * MEMBER_COUNT
    entries = []
    for sid in sorted(groups):
        g = groups.pop(sid)  # release each group's buffers as soon as it is encoded
        for member, blob in g.encode():
            entries.append(IndexEntry(sid, member, sizes[member], len(blob), g.count))
            merged[member].append(blob)
            sizes[member] += len(blob)
    members = [b"".join(m) for m in merged]
    members[Member.MODIFIED_LOG] = modified
    members[Member.SIGNATURES] = serialize_signature_table(table)
    members[Member.INDEX] = serialize_index(entries)
    return EncodedBlock(line_count, members)


# ---------------------------------------------------------------------------
# the block encoder

_PURE = F_DIGIT
_SHAPE = bytes(0x30 if 0x30 <= b <= 0x39 else b for b in range(256))
_NONDIGIT_TO_SPACE = bytes(b if 0x30 <= b <= 0x39 else 0x20 for b in range(256))
_NO_COMPLEX = F_LETTER | F_HIGH
_KEYWORD_MASK = F_DIGIT | F_SPECIAL


class BlockEncoder:
    """Turns the raw bytes of one block into an :class:`EncodedBlock`.

    One instance per block; holds no state shared with other blocks.
    """

    def __init__(self, mode: Mode = Mode.DELOG, features: Features = Features.FULL,
                 rules: Sequence[NamedPatternRule] = BUILTIN_RULES):
        self.mode = mode
        self.features = features
        self.rules = tuple(rules) if mode is Mode.DELOG and features is not Features.BINARY else ()

    def encode(self, data: bytes, reads=None) -> EncodedBlock:
        table = SignatureTable()
        groups: dict[int, TokenGroup] = {}
        out = bytearray()
        emitted = 0
        needs_escape = _SENTINEL_B in data
        full = self.features is Features.FULL
        binary = self.features is Features.BINARY
        rules = self.rules
        ids = table.ids
        line_count = 0

        def sig_id_for(ident: tuple) -> tuple[int, TokenGroup]:
            i = ids.get(ident)
            if i is None:
                sig = signature_from_ident(ident)
                i = table.intern(sig)
                groups[i] = new_group(i, sig)
            return i, groups[i]

        ph_cache: dict[int, bytes] = {}

        # Per token shape (digits folded to '0'): the digit-run lengths, the
        # literal segments and the named rules whose regex accepts the shape.
        shapes: dict[bytes, tuple] = {}
        per_token_rules = any(not r.shape_invariant for r in rules)

        def shape_info(tok: bytes, shape: bytes) -> tuple:
            runs, literals = split_runs(tok)
            cands = () if per_token_rules else tuple(
                r for r in rules if r.matcher.fullmatch(shape) is not None)
            info = shapes[shape] = (cands, tuple(map(len, runs)), tuple(literals))
            return info

        for ch in scan_chunks(data, reads):
            tok_start = ch.tok_start
            tok_end = ch.tok_end
            tok_flags = ch.tok_flags
            special_end = ch.special_end
            special = ch.special
            t = 0
            line_count += len(ch.line_end)
            for ntok in ch.line_ntok:
                ctx = b""
                idx = 0
                while t < ntok:
                    f = tok_flags[t]
                    s = tok_start[t]
                    e = tok_end[t]
                    t += 1
                    if not f & _KEYWORD_MASK:
                        ctx = data[s:e]
                        idx = 0
                        continue
                    tok = data[s:e]
                    vals = None
                    octets = False
                    if binary:
                        ident = (6,)
                    elif f == _PURE and not rules:
                        n = e - s
                        if n <= 2:
                            ident = (1, n)
                        elif full:
                            ident = (2, ctx, idx, n)
                        else:
                            ident = (2, None, None, n)
                    elif f & F_DIGIT:
                        shape = tok.translate(_SHAPE)
                        info = shapes.get(shape) or shape_info(tok, shape)
                        cands = info[0]
                        if per_token_rules:
                            cands = [r for r in rules if r.matcher.fullmatch(tok) is not None]
                        ident = None
                        for r in cands:
                            if r.layout is Layout.OCTETS4:
                                vals = canonical_octets(tok)
                                if vals is None:
                                    continue
                                octets = True
                                ident = (5, r.name, r.layout, ctx if full else None, None, None)
                            else:
                                vals = tok.translate(_NONDIGIT_TO_SPACE).split()
                                ident = (5, r.name, r.layout, ctx if full else None, info[1], info[2])
                            break
                        if ident is None and f == _PURE:
                            n = e - s
                            if n <= 2:
                                ident = (1, n)
                            elif full:
                                ident = (2, ctx, idx, n)
                            else:
                                ident = (2, None, None, n)
                        elif ident is None and not f & _NO_COMPLEX:
                            vals = tok.translate(_NONDIGIT_TO_SPACE).split()
                            ident = (3, ctx if full else None, info[1], info[2])
                        elif ident is None:
                            sp = special[special_end[t - 2] if t >= 2 else 0:special_end[t - 1]]
                            ident = (4, ctx if full else None, b"_" + sp)
                    else:
                        sp = special[special_end[t - 2] if t >= 2 else 0:special_end[t - 1]]
                        ident = (4, ctx if full else None, b"_" + sp)
                    sid = ids.get(ident)
                    if sid is None:
                        sid, g = sig_id_for(ident)
                    else:
                        g = groups[sid]
                    if vals is None:
                        g.add(tok)
                    elif octets:
                        g.add_octets(vals)
                    else:
                        g.add_runs(vals)
                    ph = ph_cache.get(sid)
                    if ph is None:
                        ph = ph_cache[sid] = placeholder(sid)
                    if needs_escape:
                        out += escape(data[emitted:s])
                    else:
                        out += data[emitted:s]
                    out += ph
                    emitted = e
                    idx += 1
        if needs_escape:
            out += escape(data[emitted:])
        else:
            out += data[emitted:]
        return finalize_block(groups, table, out, line_count)
