"""Block-parallel compression and decompression of whole files.

Input is cut into blocks of ``block_lines`` LF-terminated lines.  Each block
is encoded and kernel-compressed independently, possibly in a worker
process, and blocks are committed strictly in input order, so the archive
does not depend on the worker count.
"""

from __future__ import annotations

import hashlib
import io
import os
import shutil
import tempfile
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path
from typing import BinaryIO, Callable, Iterable, Iterator, TypeVar

from ._memory import release_free_memory
from .container import (ArchiveManifest, KernelId, block_spans, get_kernel, kernel_compress,
                        kernel_decompress, read_manifest, write_archive)
from .decompressor import decompress_block
from .errors import DelogError, MalformedArchive
from .grouper import BlockEncoder
from .signatures import BUILTIN_RULES, Features, Mode, NamedPatternRule, load_rules

T = TypeVar("T")
R = TypeVar("R")

DEFAULT_BLOCK_LINES = 100_000
DEFAULT_WORKERS = 4
WORKERS_ENV = "DELOG_WORKERS"


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {env!r}") from None
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {env!r}")
        return n
    return DEFAULT_WORKERS


@dataclass(frozen=True)
class RunConfig:
    mode: Mode = Mode.DELOG
    kernel: KernelId = KernelId.LZMA
    level: int | None = None  # None = the kernel's highest level
    block_lines: int = DEFAULT_BLOCK_LINES
    workers: int = field(default_factory=default_workers)
    features: Features = Features.FULL
    rules: tuple[NamedPatternRule, ...] = BUILTIN_RULES
    rules_path: str | None = None

    def __post_init__(self):
        if self.block_lines < 1:
            raise ValueError("block_lines must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")
        kernel = get_kernel(self.kernel)
        if self.level is not None and not 0 <= self.level <= kernel.max_level:
            raise ValueError(f"level for {kernel.id.label} must be in 0..{kernel.max_level}")

    @classmethod
    def with_rules_file(cls, path: str, **kw) -> "RunConfig":
        return cls(rules=load_rules(path), rules_path=path, **kw)

    def encoder(self) -> BlockEncoder:
        return BlockEncoder(self.mode, self.features, self.rules)


def read_blocks(stream: BinaryIO, block_lines: int, chunk_size: int = 1 << 20) -> Iterator[bytes]:
    """Yield the exact bytes of consecutive ``block_lines``-line slices of the stream."""
    pieces: list[bytes] = []
    lines = 0
    while True:
        chunk = stream.read(chunk_size)
        if not chunk:
            break
        c = chunk.count(b"\n")
        while lines + c >= block_lines:
            need = block_lines - lines
            pos = -1
            for _ in range(need):
                pos = chunk.find(b"\n", pos + 1)
            pieces.append(chunk[:pos + 1])
            chunk = chunk[pos + 1:]
            c -= need
            lines = 0
            yield _drain(pieces)
        if chunk:
            pieces.append(chunk)
            lines += c
    if pieces:
        yield _drain(pieces)


def _drain(pieces: list[bytes]) -> bytes:
    out = b"".join(pieces)
    pieces.clear()
    return out


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int) -> Iterator[R]:
    """``map`` over a process pool, results in input order, at most 2*workers in flight.

    If ``items`` itself fails, results already submitted are still yielded
    before the error propagates.
    """
    if workers <= 1:
        yield from map(fn, items)
        return
    with ProcessPoolExecutor(workers) as ex:
        pending: deque = deque()
        it = iter(items)
        failure: BaseException | None = None
        while True:
            try:
                item = next(it)
            except StopIteration:
                break
            except DelogError as e:
                failure = e
                break
            pending.append(ex.submit(fn, item))
            if len(pending) >= 2 * workers:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()
        if failure is not None:
            raise failure


def _compress_one(item: list, encoder: BlockEncoder, kernel: KernelId,
                  level: int | None) -> bytes:
    """``item`` is ``[index, data]``; data is taken out of it so the raw block
    can be freed before the kernel runs."""
    i, data = item[0], item.pop()
    try:
        parts = encoder.encode(data).to_parts()
        del data
        release_free_memory()
        packed = kernel_compress(get_kernel(kernel), parts, level, i)
        release_free_memory()
        return packed
    except DelogError as e:
        raise e.at_block(i)


def _decompress_one(item: tuple[int, bytes], kernel: KernelId) -> bytes:
    i, data = item
    try:
        out = decompress_block(kernel_decompress(get_kernel(kernel), data, i))
        release_free_memory()
        return out
    except DelogError as e:
        raise e.at_block(i)


@dataclass
class CompressStats:
    original_bytes: int = 0
    compressed_bytes: int = 0
    blocks: int = 0
    lines: int = 0

    @property
    def ratio(self) -> float:
        return self.original_bytes / self.compressed_bytes if self.compressed_bytes else float("inf")


def compress_stream(src: BinaryIO, dst: BinaryIO, config: RunConfig) -> CompressStats:
    stats = CompressStats()
    last = [b""]

    def blocks() -> Iterator[list]:
        for i, data in enumerate(read_blocks(src, config.block_lines)):
            stats.original_bytes += len(data)
            stats.lines += data.count(b"\n") + (data[-1:] != b"\n")
            last[0] = data[-1:]
            item = [i, data]
            del data
            yield item

    fn = partial(_compress_one, encoder=config.encoder(), kernel=config.kernel, level=config.level)
    payloads = list(ordered_map(fn, blocks(), config.workers))
    manifest = ArchiveManifest(config.mode, config.kernel, last[0] == b"\n", len(payloads))
    archive = write_archive(payloads, manifest, compressed=True)
    dst.write(archive)
    stats.blocks = len(payloads)
    stats.compressed_bytes = len(archive)
    return stats


def compress_bytes(data: bytes, config: RunConfig | None = None) -> bytes:
    out = io.BytesIO()
    compress_stream(io.BytesIO(data), out, config or RunConfig(workers=1))
    return out.getvalue()


def decompress_stream(archive: bytes, dst: BinaryIO, workers: int = 1) -> ArchiveManifest:
    manifest, start = read_manifest(archive)
    last = b""
    wrote_any = False

    def spans() -> Iterator[tuple[int, bytes]]:
        for i, off, n in block_spans(archive, start, manifest.block_count):
            yield i, archive[off:off + n]

    fn = partial(_decompress_one, kernel=manifest.kernel)
    for i, data in enumerate(ordered_map(fn, spans(), workers)):
        if not data:
            raise MalformedArchive("empty block", i)
        if i < manifest.block_count - 1 and data[-1:] != b"\n":
            raise MalformedArchive("non-final block does not end with LF", i)
        dst.write(data)
        last = data[-1:]
        wrote_any = True
        del data  # do not hold a block while the next one decodes
    if wrote_any and (last == b"\n") != manifest.trailing_lf:
        raise MalformedArchive("final block disagrees with the trailing-LF flag",
                               manifest.block_count - 1)
    return manifest


def decompress_bytes(archive: bytes, workers: int = 1) -> bytes:
    out = io.BytesIO()
    decompress_stream(archive, out, workers)
    return out.getvalue()


def compress_file(src: str | os.PathLike, dst: str | os.PathLike, config: RunConfig) -> CompressStats:
    with open(src, "rb") as fi, open(dst, "wb") as fo:
        return compress_stream(fi, fo, config)


def decompress_file(src: str | os.PathLike, dst: str | os.PathLike, workers: int = 1) -> ArchiveManifest:
    archive = Path(src).read_bytes()
    with open(dst, "wb") as fo:
        return decompress_stream(archive, fo, workers)


# ---------------------------------------------------------------------------
# verify

@dataclass
class VerifyResult:
    ok: bool
    original_sha256: str
    restored_sha256: str
    first_difference: int | None
    stats: CompressStats

    def describe(self) -> str:
        if self.ok:
            return (f"OK sha256={self.original_sha256} ratio={self.stats.ratio:.3f} "
                    f"({self.stats.original_bytes} -> {self.stats.compressed_bytes} bytes)")
        return (f"MISMATCH at byte offset {self.first_difference}: "
                f"original sha256={self.original_sha256} restored sha256={self.restored_sha256}")


def _sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(partial(f.read, 1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def first_difference(a: str | os.PathLike, b: str | os.PathLike, chunk: int = 1 << 20) -> int | None:
    offset = 0
    with open(a, "rb") as fa, open(b, "rb") as fb:
        while True:
            x = fa.read(chunk)
            y = fb.read(chunk)
            if x != y:
                for i, (p, q) in enumerate(zip(x, y)):
                    if p != q:
                        return offset + i
                return offset + min(len(x), len(y))
            if not x:
                return None
            offset += len(x)


def verify_file(src: str | os.PathLike, config: RunConfig) -> VerifyResult:
    """Compress to a temp archive, decompress it, and compare with the input."""
    tmp = tempfile.mkdtemp(prefix="delog-verify-")
    try:
        arc = os.path.join(tmp, "archive.dlg")
        out = os.path.join(tmp, "restored")
        stats = compress_file(src, arc, config)
        decompress_file(arc, out, config.workers)
        h1, h2 = _sha256_file(src), _sha256_file(out)
        diff = None if h1 == h2 else first_difference(src, out)
        return VerifyResult(h1 == h2, h1, h2, diff, stats)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def with_overrides(config: RunConfig, **kw) -> RunConfig:
    return replace(config, **kw)
