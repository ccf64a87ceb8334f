"""Pattern categories, signature synthesis and the per-block signature table.

Every non-keyword token gets a signature built from the features that make
its group homogeneous:

=================  ============================  ==============================
category           condition                     key
=================  ============================  ==============================
Keyword            no digits, no ASCII specials  (token stays in the log)
ShortPureNumeric   all digits, length <= 2       ``<LEN=n>``
LongPureNumeric    all digits, length > 2        ``<IDX=i|CTX=c|LEN=n>``
ComplexNumeric     digits + specials only        ``<CTX=c|STR=\\d{2}-\\d{2}>``
Alphanumeric       anything else                 ``<CTX=c|STR=_-->``
NamedPattern       a named rule matched          ``<PAT=ipv4>``
=================  ============================  ==============================

Named rules (regular expressions for IPs and timestamps) run only in
``delog`` mode; ``delog_l`` never touches a regex.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .scanner import F_DIGIT, F_HIGH, F_LETTER, F_SPECIAL, FeaturePool


class Category(enum.IntEnum):
    KEYWORD = 0
    SHORT_NUMERIC = 1
    LONG_NUMERIC = 2
    COMPLEX_NUMERIC = 3
    ALPHANUMERIC = 4
    NAMED = 5
    VARIABLE = 6  # the single catch-all signature of the binary ablation


class Mode(enum.IntEnum):
    DELOG = 0
    DELOG_L = 1

    @classmethod
    def parse(cls, text: str) -> "Mode":
        return {"delog": cls.DELOG, "delog-l": cls.DELOG_L, "delog_l": cls.DELOG_L}[text.lower()]

    @property
    def label(self) -> str:
        return "delog" if self is Mode.DELOG else "delog-l"


class Features(enum.Enum):
    """Which feature set feeds the signature (the three ablation settings)."""

    BINARY = "binary"
    INTRINSIC = "intrinsic"
    FULL = "full"


class Layout(enum.IntEnum):
    OCTETS4 = 0
    FIXED_RUNS = 1

    @classmethod
    def parse(cls, text: str) -> "Layout":
        key = text.strip().lower().replace("_", "").replace("-", "")
        if key == "octets4":
            return cls.OCTETS4
        if key == "fixedruns":
            return cls.FIXED_RUNS
        raise ValueError(f"unknown value layout {text!r} (expected octets4 or fixed_runs)")


MAX_INT_DIGITS = 18

_PURE_DIGITS = F_DIGIT
_NON_COMPLEX = F_LETTER | F_HIGH

_NONDIGIT_TO_SPACE = bytes(b if 0x30 <= b <= 0x39 else 0x20 for b in range(256))


def split_runs(token: bytes) -> tuple[list[bytes], list[bytes]]:
    """Split into maximal digit runs and the literal segments around them.

    ``len(literals) == len(runs) + 1``; segments may be empty.  Tokens never
    contain spaces, so translating non-digits to spaces isolates the runs.
    """
    runs = token.translate(_NONDIGIT_TO_SPACE).split()
    literals = []
    pos = 0
    find = token.find
    for r in runs:
        i = find(r, pos)
        literals.append(token[pos:i])
        pos = i + len(r)
    literals.append(token[pos:])
    return runs, literals


# ---------------------------------------------------------------------------
# key rendering

_ESCAPES = {c: b"%%%02X" % c for c in b"%|<>=\\"}


def escape_key_bytes(data: bytes) -> bytes:
    if not any(c in _ESCAPES for c in data):
        return data
    return b"".join(_ESCAPES.get(c, bytes((c,))) for c in data)


def unescape_key_bytes(data: bytes) -> bytes:
    if b"%" not in data:
        return data
    out = bytearray()
    i = 0
    while i < len(data):
        c = data[i]
        if c == 0x25:
            out.append(int(data[i + 1:i + 3], 16))
            i += 3
        else:
            out.append(c)
            i += 1
    return bytes(out)


def render_pattern(runs: Sequence[int], literals: Sequence[bytes]) -> bytes:
    parts = [escape_key_bytes(literals[0])]
    for r, lit in zip(runs, literals[1:]):
        parts.append(b"\\d{%d}" % r)
        parts.append(escape_key_bytes(lit))
    return b"".join(parts)


def parse_pattern(pat: bytes) -> tuple[tuple[int, ...], tuple[bytes, ...]]:
    runs = []
    literals = []
    cur = bytearray()
    i = 0
    while i < len(pat):
        if pat.startswith(b"\\d{", i):
            j = pat.index(b"}", i)
            runs.append(int(pat[i + 3:j]))
            literals.append(unescape_key_bytes(bytes(cur)))
            cur = bytearray()
            i = j + 1
        else:
            cur.append(pat[i])
            i += 1
    literals.append(unescape_key_bytes(bytes(cur)))
    return tuple(runs), tuple(literals)


@dataclass(frozen=True)
class PatternSignature:
    category: Category
    ctx: bytes | None = None
    idx: int | None = None
    length: int | None = None
    runs: tuple[int, ...] | None = None
    literals: tuple[bytes, ...] | None = None
    special_sig: bytes | None = None
    name: str | None = None
    layout: Layout | None = None

    @property
    def ident(self) -> tuple:
        """Compact hashable identity; equal idents <=> equal keys."""
        c = self.category
        if c is Category.SHORT_NUMERIC:
            return (1, self.length)
        if c is Category.LONG_NUMERIC:
            return (2, self.ctx, self.idx, self.length)
        if c is Category.COMPLEX_NUMERIC:
            return (3, self.ctx, self.runs, self.literals)
        if c is Category.ALPHANUMERIC:
            return (4, self.ctx, self.special_sig)
        if c is Category.NAMED:
            return (5, self.name, self.layout, self.ctx, self.runs, self.literals)
        if c is Category.VARIABLE:
            return (6,)
        raise ValueError("keywords have no signature")

    @property
    def key(self) -> bytes:
        return render_key(self)


def signature_from_ident(ident: tuple) -> PatternSignature:
    tag = ident[0]
    if tag == 1:
        return PatternSignature(Category.SHORT_NUMERIC, length=ident[1])
    if tag == 2:
        return PatternSignature(Category.LONG_NUMERIC, ctx=ident[1], idx=ident[2], length=ident[3])
    if tag == 3:
        return PatternSignature(Category.COMPLEX_NUMERIC, ctx=ident[1], runs=ident[2], literals=ident[3])
    if tag == 4:
        return PatternSignature(Category.ALPHANUMERIC, ctx=ident[1], special_sig=ident[2])
    if tag == 5:
        return PatternSignature(Category.NAMED, name=ident[1], layout=ident[2], ctx=ident[3],
                                runs=ident[4], literals=ident[5])
    if tag == 6:
        return PatternSignature(Category.VARIABLE)
    raise ValueError(f"bad signature ident {ident!r}")


def render_key(sig: PatternSignature) -> bytes:
    fields = []
    if sig.category is Category.VARIABLE:
        return b"<VAR>"
    if sig.category is Category.NAMED:
        fields.append(b"PAT=" + escape_key_bytes(sig.name.encode()))
    if sig.idx is not None:
        fields.append(b"IDX=%d" % sig.idx)
    if sig.ctx is not None:
        fields.append(b"CTX=" + escape_key_bytes(sig.ctx))
    if sig.length is not None:
        fields.append(b"LEN=%d" % sig.length)
    if sig.runs is not None:
        fields.append(b"STR=" + render_pattern(sig.runs, sig.literals))
    if sig.special_sig is not None:
        fields.append(b"STR=" + escape_key_bytes(sig.special_sig))
    return b"<" + b"|".join(fields) + b">"


def parse_key(key: bytes) -> PatternSignature:
    """Inverse of :func:`render_key`."""
    if not (key.startswith(b"<") and key.endswith(b">")):
        raise ValueError(f"not a signature key: {key!r}")
    body = key[1:-1]
    if body == b"VAR":
        return PatternSignature(Category.VARIABLE)
    fields = {}
    for part in body.split(b"|"):
        name, _, value = part.partition(b"=")
        fields[name] = value
    ctx = unescape_key_bytes(fields[b"CTX"]) if b"CTX" in fields else None
    if b"PAT" in fields:
        name = unescape_key_bytes(fields[b"PAT"]).decode()
        if b"STR" in fields:
            runs, literals = parse_pattern(fields[b"STR"])
            return PatternSignature(Category.NAMED, name=name, layout=Layout.FIXED_RUNS, ctx=ctx,
                                    runs=runs, literals=literals)
        return PatternSignature(Category.NAMED, name=name, layout=Layout.OCTETS4, ctx=ctx)
    if b"LEN" in fields:
        n = int(fields[b"LEN"])
        if n <= 2 and b"IDX" not in fields and ctx is None:
            return PatternSignature(Category.SHORT_NUMERIC, length=n)
        idx = int(fields[b"IDX"]) if b"IDX" in fields else None
        return PatternSignature(Category.LONG_NUMERIC, ctx=ctx, idx=idx, length=n)
    s = fields[b"STR"]
    if b"\\d{" in s:
        runs, literals = parse_pattern(s)
        return PatternSignature(Category.COMPLEX_NUMERIC, ctx=ctx, runs=runs, literals=literals)
    return PatternSignature(Category.ALPHANUMERIC, ctx=ctx, special_sig=unescape_key_bytes(s))


# ---------------------------------------------------------------------------
# named rules

class NamedMatch(NamedTuple):
    rule: "NamedPatternRule"
    runs: tuple[int, ...] | None
    literals: tuple[bytes, ...] | None
    values: list  # Octets4: four ints; FixedRuns: digit strings per run

    @property
    def category(self) -> Category:
        return Category.NAMED

    @property
    def name(self) -> str:
        return self.rule.name


def canonical_octets(token: bytes) -> list[int] | None:
    """The four octets of a dotted quad, or None unless ``"%d.%d.%d.%d"`` gives it back exactly."""
    parts = token.split(b".")
    if len(parts) != 4:
        return None
    values = []
    for p in parts:
        if not p.isdigit() or len(p) > 3 or (len(p) > 1 and p[0] == 0x30):
            return None
        v = int(p)
        if v > 255:
            return None
        values.append(v)
    return values


# \d and {m,n} quantifiers are the only places a digit may appear in a
# shape-invariant pattern
_DIGIT_FREE = re.compile(rb"\\d|\{\d*(?:,\d*)?\}")


@dataclass(frozen=True)
class NamedPatternRule:
    name: str
    layout: Layout
    matcher: re.Pattern

    @property
    def shape_invariant(self) -> bool:
        """True if whether the regex matches depends only on where the digits are.

        Holds when the pattern has no digit characters outside ``\\d`` and
        quantifier braces: every character class then contains all ten
        digits or none of them.
        """
        rest = _DIGIT_FREE.sub(b"", self.matcher.pattern)
        return not any(0x30 <= c <= 0x39 for c in rest)

    @classmethod
    def compile(cls, name: str, layout: Layout | str, pattern: str | bytes) -> "NamedPatternRule":
        if isinstance(layout, str):
            layout = Layout.parse(layout)
        if isinstance(pattern, str):
            pattern = pattern.encode()
        if not name or any(c in name for c in "\t\n"):
            raise ValueError(f"invalid rule name {name!r}")
        return cls(name, layout, re.compile(pattern))

    def match(self, token: bytes) -> NamedMatch | None:
        if self.matcher.fullmatch(token) is None:
            return None
        if self.layout is Layout.OCTETS4:
            values = canonical_octets(token)
            return None if values is None else NamedMatch(self, None, None, values)
        runs, literals = split_runs(token)
        if not runs:
            return None
        return NamedMatch(self, tuple(map(len, runs)), tuple(literals), runs)


BUILTIN_RULES: tuple[NamedPatternRule, ...] = (
    NamedPatternRule.compile("ipv4", Layout.OCTETS4, rb"\d{1,3}(?:\.\d{1,3}){3}"),
    NamedPatternRule.compile("ts_hms", Layout.FIXED_RUNS, rb"\d{2}:\d{2}:\d{2}(?:,\d{3})?"),
)


def load_rules(path: str | Path, include_builtin: bool = True) -> tuple[NamedPatternRule, ...]:
    """Read ``name<TAB>layout<TAB>pattern`` lines; ``#`` starts a comment line."""
    rules = list(BUILTIN_RULES) if include_builtin else []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t", 2)
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected name<TAB>layout<TAB>pattern")
        try:
            rules.append(NamedPatternRule.compile(*parts))
        except (ValueError, re.error) as e:
            raise ValueError(f"{path}:{lineno}: {e}") from None
    return tuple(rules)


def match_common(token: bytes, rules: Iterable[NamedPatternRule] = BUILTIN_RULES) -> NamedMatch | None:
    """First rule matching the whole token and passing its canonicality check.

    Only tokens that contain a digit are considered.
    """
    if not any(0x30 <= c <= 0x39 for c in token):
        return None
    for rule in rules:
        m = rule.match(token)
        if m is not None:
            return m
    return None


# ---------------------------------------------------------------------------
# classification and synthesis

def category_of(flags: int, length: int) -> Category:
    if not flags & (F_DIGIT | F_SPECIAL):
        return Category.KEYWORD
    if flags == _PURE_DIGITS:
        return Category.SHORT_NUMERIC if length <= 2 else Category.LONG_NUMERIC
    if flags & F_DIGIT and flags & F_SPECIAL and not flags & _NON_COMPLEX:
        return Category.COMPLEX_NUMERIC
    return Category.ALPHANUMERIC


def classify(pool: FeaturePool, mode: Mode = Mode.DELOG, features: Features = Features.FULL,
             rules: Sequence[NamedPatternRule] = BUILTIN_RULES) -> Category | NamedMatch:
    """Category of a token; a :class:`NamedMatch` when a named rule claims it."""
    if mode is Mode.DELOG and features is not Features.BINARY and rules and pool.flags & F_DIGIT:
        m = match_common(pool.current_token, rules)
        if m is not None:
            return m
    return category_of(pool.flags, pool.token_length)


def synthesize(pool: FeaturePool, category: Category | NamedMatch,
               features: Features = Features.FULL) -> PatternSignature:
    if category is Category.KEYWORD:
        raise ValueError("keywords have no signature")
    if features is Features.BINARY:
        return PatternSignature(Category.VARIABLE)
    full = features is Features.FULL
    ctx = pool.semantic_context if full else None
    if isinstance(category, NamedMatch):
        r = category.rule
        return PatternSignature(Category.NAMED, name=r.name, layout=r.layout, ctx=ctx,
                                runs=category.runs, literals=category.literals)
    if category is Category.SHORT_NUMERIC:
        return PatternSignature(category, length=pool.token_length)
    if category is Category.LONG_NUMERIC:
        return PatternSignature(category, ctx=ctx, idx=pool.token_index if full else None,
                                length=pool.token_length)
    if category is Category.COMPLEX_NUMERIC:
        runs, literals = split_runs(pool.current_token)
        return PatternSignature(category, ctx=ctx, runs=tuple(map(len, runs)), literals=tuple(literals))
    return PatternSignature(Category.ALPHANUMERIC, ctx=ctx, special_sig=b"_" + pool.ascii_special)


class SignatureTable:
    """Interns signatures to dense ids in first-appearance order."""

    def __init__(self, signatures: Iterable[PatternSignature] = ()):
        self.signatures: list[PatternSignature] = []
        self.ids: dict[tuple, int] = {}
        for s in signatures:
            self.intern(s)

    def __len__(self) -> int:
        return len(self.signatures)

    def __iter__(self):
        return iter(self.signatures)

    def __getitem__(self, i: int) -> PatternSignature:
        return self.signatures[i]

    def intern(self, sig: PatternSignature) -> int:
        ident = sig.ident
        i = self.ids.get(ident)
        if i is None:
            i = self.ids[ident] = len(self.signatures)
            self.signatures.append(sig)
        return i

    def lookup(self, i: int) -> PatternSignature:
        return self.signatures[i]

    def keys(self) -> list[bytes]:
        return [s.key for s in self.signatures]


def intern(table: SignatureTable, sig: PatternSignature) -> int:
    return table.intern(sig)
