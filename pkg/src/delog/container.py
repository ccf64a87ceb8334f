"""Archive container (``.dlg``) and the pluggable final-stage kernels.

Layout::

    "DLG1" | version u8 | mode u8 | kernel u8 | flags u8 | elastic(block_count)
    then per block: elastic(len) | kernel-compressed payload

Block payload after kernel decompression::

    elastic(line_count) | 7 x elastic(member_len) | members...

Every multi-byte integer is elastic-coded.
"""

from __future__ import annotations

import bz2
import enum
import lzma
import zlib
from dataclasses import dataclass
from typing import Iterator, Sequence

from .codecs import elastic_decode, elastic_encode
from .errors import (BadMagic, CodecError, KernelError, MalformedArchive, MalformedTable,
                     TruncatedArchive, UnsupportedVersion)
from .signatures import Category, Layout, Mode, PatternSignature, SignatureTable

MAGIC = b"DLG1"
FORMAT_VERSION = 1
HEADER_SIZE = 8
FLAG_TRAILING_LF = 0x01


class KernelId(enum.IntEnum):
    NONE = 0
    GZIP = 1
    BZIP2 = 2
    LZMA = 3

    @classmethod
    def parse(cls, text: str) -> "KernelId":
        try:
            return cls[text.upper()]
        except KeyError:
            raise ValueError(f"unknown kernel {text!r}") from None

    @property
    def label(self) -> str:
        return self.name.lower()


class Kernel:
    """General-purpose compressor applied to each block payload."""

    id: KernelId
    max_level: int = 0

    def compress(self, data: bytes, level: int | None = None) -> bytes:
        raise NotImplementedError

    def compress_parts(self, parts: Sequence[bytes], level: int | None = None) -> bytes:
        """Compress the concatenation of ``parts``; kernels may stream them."""
        return self.compress(b"".join(parts), level)

    def decompress(self, data: bytes) -> bytes:
        raise NotImplementedError

    def compress_standalone(self, data: bytes, level: int | None = None) -> bytes:
        """Compress as the stock tool would, with no archive-specific tuning.

        This is the plain-kernel baseline of the benchmarks.
        """
        return self.compress(data, level)


class NoneKernel(Kernel):
    id = KernelId.NONE

    def compress(self, data, level=None):
        return bytes(data)

    def decompress(self, data):
        return bytes(data)


class GzipKernel(Kernel):
    """zlib-framed deflate."""

    id = KernelId.GZIP
    max_level = 9

    def compress(self, data, level=None):
        return self.compress_parts((data,), level)

    def compress_parts(self, parts, level=None):
        c = zlib.compressobj(self.max_level if level is None else level)
        out = [c.compress(p) for p in _consume(parts)]
        out.append(c.flush())
        return b"".join(out)

    def decompress(self, data):
        return zlib.decompress(data)


class Bzip2Kernel(Kernel):
    id = KernelId.BZIP2
    max_level = 9

    def compress(self, data, level=None):
        return self.compress_parts((data,), level)

    def compress_parts(self, parts, level=None):
        c = bz2.BZ2Compressor(self.max_level if level is None else max(1, level))
        out = [c.compress(p) for p in _consume(parts)]
        out.append(c.flush())
        return b"".join(out)

    def decompress(self, data):
        d = bz2.BZ2Decompressor()
        out = d.decompress(data)
        if not d.eof or d.unused_data:
            raise ValueError("bzip2 stream is truncated or has trailing data")
        return out


def _window_for(total: int, minimum: int) -> int:
    """Largest ``2**n`` or ``3 * 2**(n-1)`` not above ``total`` (the sizes the
    ``.lzma`` header stores exactly), but at least ``minimum``."""
    if total <= minimum:
        return minimum
    p = 1 << (total.bit_length() - 1)
    return p + p // 2 if p + p // 2 <= total else p


def _consume(parts: Sequence[bytes]) -> Iterator[bytes]:
    """Yield the parts of a list, dropping each reference once it is handed out."""
    if isinstance(parts, list):
        parts.reverse()
        while parts:
            yield parts.pop()
    else:
        yield from parts


# dictionary size of each xz/lzma preset level
_PRESET_DICT = [1 << 18, 1 << 20, 1 << 21, 1 << 22, 1 << 22, 1 << 23, 1 << 23, 1 << 24, 1 << 25, 1 << 26]


class LzmaKernel(Kernel):
    """Legacy ``.lzma`` framing (13-byte header) to keep per-block overhead small.

    The match finder's tables cost about 11 bytes per window byte, so the
    window is capped at half the payload.  Log payloads repeat locally;
    on the bundled corpora any window of 2 MiB or more gives the same
    output size.
    """

    id = KernelId.LZMA
    max_level = 9
    MIN_DICT = 1 << 16

    def compress(self, data, level=None):
        return self.compress_parts((data,), level)

    def compress_parts(self, parts, level=None):
        preset = self.max_level if level is None else level
        total = sum(len(p) for p in parts)
        dict_size = min(_PRESET_DICT[preset], _window_for(total // 2, self.MIN_DICT))
        c = lzma.LZMACompressor(format=lzma.FORMAT_ALONE, filters=[
            {"id": lzma.FILTER_LZMA1, "preset": preset, "dict_size": dict_size}])
        out = [c.compress(p) for p in _consume(parts)]
        out.append(c.flush())
        return b"".join(out)

    def compress_standalone(self, data, level=None):
        # the stock preset, full-size window included
        return lzma.compress(data, format=lzma.FORMAT_ALONE,
                             preset=self.max_level if level is None else level)

    def decompress(self, data):
        d = lzma.LZMADecompressor(format=lzma.FORMAT_ALONE)
        out = d.decompress(data)
        if not d.eof or d.unused_data:
            raise ValueError("lzma stream is truncated or has trailing data")
        return out


KERNELS: dict[KernelId, Kernel] = {k.id: k for k in (NoneKernel(), GzipKernel(), Bzip2Kernel(), LzmaKernel())}


def get_kernel(kid: KernelId | int | str) -> Kernel:
    if isinstance(kid, str):
        kid = KernelId.parse(kid)
    try:
        return KERNELS[KernelId(kid)]
    except ValueError:
        raise KernelError(f"unknown kernel id {kid}") from None


def kernel_compress(kernel: Kernel, data: bytes | Sequence[bytes], level: int | None,
                    block: int | None = None) -> bytes:
    """Compress a payload, given whole or as a sequence of parts to concatenate."""
    try:
        if isinstance(data, (bytes, bytearray, memoryview)):
            return kernel.compress(data, level)
        return kernel.compress_parts(data, level)
    except Exception as e:  # plugin failures of any type
        raise KernelError(f"{kernel.id.label} compression failed: {e}", block) from e


def kernel_decompress(kernel: Kernel, data: bytes, block: int | None = None) -> bytes:
    try:
        return kernel.decompress(data)
    except Exception as e:
        raise KernelError(f"{kernel.id.label} decompression failed: {e}", block) from e


# ---------------------------------------------------------------------------
# manifest

@dataclass(frozen=True)
class ArchiveManifest:
    mode: Mode = Mode.DELOG
    kernel: KernelId = KernelId.LZMA
    trailing_lf: bool = False
    block_count: int = 0
    version: int = FORMAT_VERSION

    def header(self) -> bytes:
        flags = FLAG_TRAILING_LF if self.trailing_lf else 0
        return (MAGIC + bytes((self.version, int(self.mode), int(self.kernel), flags))
                + elastic_encode(self.block_count))


def write_archive(blocks: Sequence[bytes], manifest: ArchiveManifest, level: int | None = None,
                  compressed: bool = False) -> bytes:
    """Frame block payloads; ``compressed=True`` means they already went through the kernel."""
    kernel = get_kernel(manifest.kernel)
    manifest = ArchiveManifest(manifest.mode, manifest.kernel, manifest.trailing_lf, len(blocks),
                               manifest.version)
    out = [manifest.header()]
    for i, payload in enumerate(blocks):
        if not compressed:
            payload = kernel_compress(kernel, payload, level, i)
        out.append(elastic_encode(len(payload)))
        out.append(payload)
    return b"".join(out)


def read_manifest(data: bytes) -> tuple[ArchiveManifest, int]:
    """Parse and validate the header; returns the manifest and the offset of block 0."""
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic(f"not a delog archive (magic {bytes(data[:4])!r})")
    if len(data) < HEADER_SIZE:
        raise TruncatedArchive("archive header is truncated")
    version, mode, kernel, flags = data[4:8]
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"archive format version {version} (supported: {FORMAT_VERSION})")
    try:
        mode = Mode(mode)
        kernel = KernelId(kernel)
    except ValueError as e:
        raise MalformedArchive(f"bad header field: {e}") from None
    if flags & ~FLAG_TRAILING_LF:
        raise MalformedArchive(f"unknown header flags {flags:#04x}")
    try:
        count, pos = elastic_decode(data, HEADER_SIZE)
    except CodecError as e:
        raise TruncatedArchive(f"block count: {e}") from None
    return ArchiveManifest(mode, kernel, bool(flags & FLAG_TRAILING_LF), count, version), pos


def block_spans(data: bytes, start: int, count: int) -> Iterator[tuple[int, int, int]]:
    """Yield ``(block, offset, length)`` of each compressed payload, in order.

    A bad length prefix raises :class:`TruncatedArchive` naming the block, after
    all earlier spans were yielded.
    """
    pos = start
    for i in range(count):
        try:
            n, pos = elastic_decode(data, pos)
        except CodecError as e:
            raise TruncatedArchive(f"length prefix: {e}", i) from None
        if pos + n > len(data):
            raise TruncatedArchive(f"payload needs {n} bytes, {len(data) - pos} left", i)
        yield i, pos, n
        pos += n
    if pos != len(data):
        raise MalformedArchive(f"{len(data) - pos} trailing bytes after last block")


def read_archive(data: bytes) -> tuple[ArchiveManifest, Iterator[bytes]]:
    """Validate the header and return a lazy iterator of decompressed block payloads."""
    manifest, pos = read_manifest(data)
    kernel = get_kernel(manifest.kernel)

    def blocks() -> Iterator[bytes]:
        for i, off, n in block_spans(data, pos, manifest.block_count):
            yield kernel_decompress(kernel, data[off:off + n], i)

    return manifest, blocks()


# ---------------------------------------------------------------------------
# signature table

_HAS_CTX, _HAS_IDX, _HAS_LEN, _HAS_RUNS, _HAS_SPECIAL, _HAS_NAME = (1 << i for i in range(6))


def _put_bytes(out: list, b: bytes) -> None:
    out.append(elastic_encode(len(b)))
    out.append(b)


def serialize_signature_table(table: SignatureTable | Sequence[PatternSignature]) -> bytes:
    """Count, then per id: category byte, presence bitmask, present fields in fixed order."""
    sigs = list(table)
    out = [elastic_encode(len(sigs))]
    for s in sigs:
        mask = ((s.ctx is not None) * _HAS_CTX | (s.idx is not None) * _HAS_IDX
                | (s.length is not None) * _HAS_LEN | (s.runs is not None) * _HAS_RUNS
                | (s.special_sig is not None) * _HAS_SPECIAL | (s.name is not None) * _HAS_NAME)
        out.append(bytes((int(s.category), mask)))
        if s.name is not None:
            _put_bytes(out, s.name.encode())
            out.append(bytes((int(s.layout),)))
        if s.ctx is not None:
            _put_bytes(out, s.ctx)
        if s.idx is not None:
            out.append(elastic_encode(s.idx))
        if s.length is not None:
            out.append(elastic_encode(s.length))
        if s.runs is not None:
            out.append(elastic_encode(len(s.runs)))
            _put_bytes(out, s.literals[0])
            for r, lit in zip(s.runs, s.literals[1:]):
                out.append(elastic_encode(r))
                _put_bytes(out, lit)
        if s.special_sig is not None:
            _put_bytes(out, s.special_sig)
    return b"".join(out)


_REQUIRED = {
    Category.SHORT_NUMERIC: _HAS_LEN,
    Category.LONG_NUMERIC: _HAS_LEN,
    Category.COMPLEX_NUMERIC: _HAS_RUNS,
    Category.ALPHANUMERIC: _HAS_SPECIAL,
    Category.NAMED: _HAS_NAME,
    Category.VARIABLE: 0,
}


def deserialize_signature_table(data: bytes) -> SignatureTable:
    try:
        return _deserialize_table(data)
    except (CodecError, IndexError, ValueError, UnicodeDecodeError) as e:
        raise MalformedTable(f"signature table: {e}") from None


def _deserialize_table(data: bytes) -> SignatureTable:
    pos = 0

    def take_int() -> int:
        nonlocal pos
        v, pos = elastic_decode(data, pos)
        return v

    def take_bytes() -> bytes:
        nonlocal pos
        n = take_int()
        if pos + n > len(data):
            raise ValueError("field runs past end of table")
        b = bytes(data[pos:pos + n])
        pos += n
        return b

    count = take_int()
    table = SignatureTable()
    for _ in range(count):
        if pos + 2 > len(data):
            raise ValueError("truncated entry header")
        category, mask = Category(data[pos]), data[pos + 1]
        pos += 2
        required = _REQUIRED.get(category)
        if required is None or mask & required != required or mask >= 1 << 6:
            raise ValueError(f"bad field mask {mask:#x} for {category.name}")
        fields: dict = {}
        if mask & _HAS_NAME:
            fields["name"] = take_bytes().decode()
            if pos >= len(data):
                raise ValueError("truncated layout byte")
            fields["layout"] = Layout(data[pos])
            pos += 1
        if mask & _HAS_CTX:
            fields["ctx"] = take_bytes()
        if mask & _HAS_IDX:
            fields["idx"] = take_int()
        if mask & _HAS_LEN:
            fields["length"] = take_int()
            if fields["length"] == 0:
                raise ValueError("zero-length numeric signature")
        if mask & _HAS_RUNS:
            n = take_int()
            if n > len(data):
                raise ValueError("implausible run count")
            literals = [take_bytes()]
            runs = []
            for _ in range(n):
                runs.append(take_int())
                literals.append(take_bytes())
            if not runs or 0 in runs:
                raise ValueError("empty digit run")
            fields["runs"] = tuple(runs)
            fields["literals"] = tuple(literals)
        if mask & _HAS_SPECIAL:
            fields["special_sig"] = take_bytes()
        if category is Category.NAMED and (fields["layout"] is Layout.FIXED_RUNS) != ("runs" in fields):
            raise ValueError("named signature layout does not match its fields")
        sig = PatternSignature(category, **fields)
        if table.intern(sig) != len(table) - 1:
            raise ValueError("duplicate signature")
    if pos != len(data):
        raise ValueError("trailing bytes after table")
    return table
