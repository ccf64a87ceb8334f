"""Single-pass byte tokenizer.

A line is a sequence of delimiter runs (space, tab, CR) and tokens.  While a
token is read, its bytes are routed into two concurrent buffers: ASCII
specials and general content (letters, digits, bytes >= 0x80).  Context
(the last keyword seen on the line) and the index of the current token
within a run of non-keywords are tracked per line.

The hot loop is a numba kernel that touches each input byte exactly once;
passing a ``reads`` counter array turns on per-byte read accounting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Union

import numba
import numpy as np

DELIMITERS = frozenset(b" \t\r")
LF = 0x0A

# byte classes
C_DELIM, C_LF, C_DIGIT, C_LETTER, C_HIGH, C_SPECIAL = range(6)

# token flag bits
F_DIGIT = 1
F_LETTER = 2
F_HIGH = 4
F_SPECIAL = 8


def _class_of(b: int) -> int:
    if b == LF:
        return C_LF
    if b in DELIMITERS:
        return C_DELIM
    if 0x30 <= b <= 0x39:
        return C_DIGIT
    if 0x41 <= b <= 0x5A or 0x61 <= b <= 0x7A:
        return C_LETTER
    if b >= 0x80:
        return C_HIGH
    return C_SPECIAL


CLASSES = np.array([_class_of(b) for b in range(256)], dtype=np.uint8)
SPECIAL_BYTES = bytes(b for b in range(256) if CLASSES[b] == C_SPECIAL)


def is_delimiter(b: int) -> bool:
    return b in DELIMITERS


def is_ascii_special(b: int) -> bool:
    """True for ASCII bytes that are neither letters nor digits (caller excludes delimiters)."""
    return b < 0x80 and not (0x30 <= b <= 0x39 or 0x41 <= b <= 0x5A or 0x61 <= b <= 0x7A)


def token_flags(token: bytes) -> int:
    flags = 0
    for b in token:
        c = CLASSES[b]
        if c == C_SPECIAL:
            flags |= F_SPECIAL
        else:
            flags |= 1 << (c - C_DIGIT)
    return flags


def split_token(token: bytes) -> tuple[bytes, bytes, int]:
    """Return ``(general_content, ascii_special, token_length)``."""
    content = bytearray()
    special = bytearray()
    for b in token:
        if is_ascii_special(b):
            special.append(b)
        else:
            content.append(b)
    return bytes(content), bytes(special), len(token)


@dataclass(slots=True)
class FeaturePool:
    current_token: bytes
    token_length: int
    ascii_special: bytes
    general_content: bytes
    semantic_context: bytes = b""
    token_index: int = 0
    flags: int = field(default=-1, repr=False)

    def __post_init__(self):
        if self.flags < 0:
            self.flags = token_flags(self.current_token)

    @classmethod
    def of(cls, token: bytes, context: bytes = b"", index: int = 0) -> "FeaturePool":
        content, special, n = split_token(token)
        return cls(token, n, special, content, context, index)


@dataclass
class ContextState:
    context: bytes = b""
    token_index: int = 0

    def reset(self) -> None:
        self.context = b""
        self.token_index = 0

    def advance(self, token: bytes, has_pattern: bool) -> None:
        if has_pattern:
            self.token_index += 1
        else:
            self.context = token
            self.token_index = 0


class DelimiterRun(NamedTuple):
    bytes: bytes


class Token(NamedTuple):
    pool: FeaturePool


SegmentEvent = Union[DelimiterRun, Token]


# ---------------------------------------------------------------------------
# kernel

@numba.njit(cache=True, nogil=True)
def _scan_chunk(buf, lo, hi, classes, reads, count):
    """Tokenize ``buf[lo:hi]``, a run of whole lines.

    Returns token start/end/flags, end offsets into the content and special
    buffers, the buffers themselves, and per line the LF position (or
    ``hi``) and the number of tokens seen so far in this chunk.  Output
    arrays are sized for the worst case up front so the loop never
    reallocates.
    """
    size = hi - lo
    tcap = size // 2 + 1
    tok_start = np.empty(tcap, np.int64)
    tok_end = np.empty(tcap, np.int64)
    tok_flags = np.empty(tcap, np.uint8)
    content_end = np.empty(tcap, np.int64)
    special_end = np.empty(tcap, np.int64)
    line_end = np.empty(size + 1, np.int64)
    line_ntok = np.empty(size + 1, np.int64)
    content = np.empty(size, np.uint8)
    special = np.empty(size, np.uint8)

    ntok = 0
    nline = 0
    nc = 0
    ns = 0
    in_tok = False
    flags = 0
    last_lf = False
    for i in range(lo, hi):
        b = buf[i]
        if count:
            reads[i] += 1
        c = classes[b]
        last_lf = c == 1
        if c <= 1:
            if in_tok:
                tok_end[ntok] = i
                tok_flags[ntok] = flags
                content_end[ntok] = nc
                special_end[ntok] = ns
                ntok += 1
                in_tok = False
            if c == 1:
                line_end[nline] = i
                line_ntok[nline] = ntok
                nline += 1
        else:
            if not in_tok:
                in_tok = True
                tok_start[ntok] = i
                flags = 0
            if c == 5:
                special[ns] = b
                ns += 1
                flags |= 8
            else:
                content[nc] = b
                nc += 1
                flags |= 1 << (c - 2)
    if in_tok:
        tok_end[ntok] = hi
        tok_flags[ntok] = flags
        content_end[ntok] = nc
        special_end[ntok] = ns
        ntok += 1
    if size > 0 and not last_lf:
        line_end[nline] = hi
        line_ntok[nline] = ntok
        nline += 1
    return (tok_start[:ntok], tok_end[:ntok], tok_flags[:ntok],
            content_end[:ntok], special_end[:ntok],
            content[:nc], special[:ns], line_end[:nline], line_ntok[:nline])


class Chunk(NamedTuple):
    """Kernel output for a run of whole lines, converted to Python lists."""

    start: int
    tok_start: list
    tok_end: list
    tok_flags: list
    content_end: list
    special_end: list
    content: bytes
    special: bytes
    line_end: list
    line_ntok: list


_NO_READS = np.zeros(1, dtype=np.int32)
CHUNK_BYTES = 1 << 18


def scan_chunks(data: bytes, reads: np.ndarray | None = None,
                chunk_bytes: int = CHUNK_BYTES) -> Iterator[Chunk]:
    """Tokenize ``data`` (LF-separated lines) in chunks of whole lines.

    ``line_end`` holds the LF position of each line, or ``len(data)`` for a
    final unterminated line.  Offsets are absolute positions in ``data``.
    """
    buf = np.frombuffer(data, dtype=np.uint8)
    count = reads is not None
    if reads is None:
        reads = _NO_READS
    elif reads.shape[0] != len(data):
        raise ValueError("reads counter must have one slot per input byte")
    lo = 0
    n = len(data)
    while lo < n:
        # chunk boundary: the first LF at or past lo + chunk_bytes
        hi = data.find(b"\n", lo + chunk_bytes) + 1 if lo + chunk_bytes < n else n
        if hi <= 0:
            hi = n
        (ts, te, tf, ce, se, content, special,
         le, ln) = _scan_chunk(buf, lo, hi, CLASSES, reads, count)
        start, lo = lo, hi
        yield Chunk(start, ts.tolist(), te.tolist(), tf.tolist(), ce.tolist(), se.tolist(),
                    content.tobytes(), special.tobytes(), le.tolist(), ln.tolist())


def iter_line_events(data: bytes, is_keyword: Callable[[FeaturePool], bool],
                     reads: np.ndarray | None = None) -> Iterator[list[SegmentEvent]]:
    """Yield, per line, its event list (delimiter runs and tokens with full pools).

    ``is_keyword`` decides how context advances, mirroring the classifier.
    Line terminators are not part of any event.
    """
    for ch in scan_chunks(data, reads):
        t = 0
        cpos = spos = 0
        pos = ch.start
        for li, lend in enumerate(ch.line_end):
            events: list[SegmentEvent] = []
            state = ContextState()
            while t < ch.line_ntok[li]:
                s, e = ch.tok_start[t], ch.tok_end[t]
                if s > pos:
                    events.append(DelimiterRun(data[pos:s]))
                ce, se = ch.content_end[t], ch.special_end[t]
                tok = data[s:e]
                pool = FeaturePool(tok, e - s, ch.special[spos:se], ch.content[cpos:ce],
                                   state.context, state.token_index, ch.tok_flags[t])
                cpos, spos = ce, se
                events.append(Token(pool))
                state.advance(tok, not is_keyword(pool))
                pos = e
                t += 1
            if lend > pos:
                events.append(DelimiterRun(data[pos:lend]))
            pos = lend + 1
            yield events


def scan_line(line: bytes, state: ContextState,
              classify: Callable[[FeaturePool], tuple[bool, bytes]]) -> bytes:
    """Run one line through the classifier and build its modified form.

    Delimiters and keyword tokens are copied (0x01 escaped); pattern tokens
    are replaced by whatever ``classify`` returns.  ``state`` is updated
    after every token.
    """
    from .grouper import escape

    if LF in line:
        raise ValueError("scan_line expects a single line without LF")
    if not line:
        return b""
    out = []
    pos = 0
    for ch in scan_chunks(line):
        cpos = spos = 0
        for t, (s, e) in enumerate(zip(ch.tok_start, ch.tok_end)):
            if s > pos:
                out.append(escape(line[pos:s]))
            ce, se = ch.content_end[t], ch.special_end[t]
            tok = line[s:e]
            pool = FeaturePool(tok, e - s, ch.special[spos:se], ch.content[cpos:ce],
                               state.context, state.token_index, ch.tok_flags[t])
            cpos, spos = ce, se
            has_pattern, replacement = classify(pool)
            out.append(replacement if has_pattern else escape(tok))
            state.advance(tok, has_pattern)
            pos = e
    if pos < len(line):
        out.append(escape(line[pos:]))
    return b"".join(out)
