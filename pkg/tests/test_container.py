import hashlib

import pytest
from hypothesis import given, strategies as st

from delog import container as ct
from delog.container import ArchiveManifest, KernelId
from delog.errors import (BadMagic, KernelError, MalformedArchive, MalformedTable, TruncatedArchive,
                          UnsupportedVersion)
from delog.pipeline import RunConfig, compress_bytes, decompress_bytes
from delog.signatures import Category, Layout, Mode, PatternSignature, SignatureTable, parse_key


def test_empty_archive():
    data = ct.write_archive([], ArchiveManifest(kernel=KernelId.NONE))
    assert data == b"DLG1\x01\x00\x00\x00\x80"
    manifest, blocks = ct.read_archive(data)
    assert manifest.block_count == 0 and list(blocks) == []


def test_none_kernel_stores_verbatim():
    data = ct.write_archive([b"payload"], ArchiveManifest(kernel=KernelId.NONE))
    assert data.endswith(b"\x87payload")


@pytest.mark.parametrize("kernel", list(KernelId))
@given(blocks=st.lists(st.binary(max_size=300), max_size=4), trailing=st.booleans())
def test_archive_round_trip(kernel, blocks, trailing):
    m = ArchiveManifest(Mode.DELOG_L, kernel, trailing)
    data = ct.write_archive(blocks, m)
    manifest, it = ct.read_archive(data)
    assert manifest == ArchiveManifest(Mode.DELOG_L, kernel, trailing, len(blocks))
    assert list(it) == blocks


@pytest.mark.parametrize("kernel", list(KernelId))
def test_kernel_parts_equal_whole(kernel):
    k = ct.get_kernel(kernel)
    parts = [b"abc" * 1000, b"", b"\x00\x01" * 50_000]
    whole = b"".join(parts)
    assert k.decompress(k.compress_parts(list(parts))) == whole
    assert k.compress_parts(list(parts)) == k.compress(whole)
    assert k.decompress(k.compress_standalone(whole)) == whole
    for level in range(k.max_level + 1):
        assert k.decompress(k.compress(whole, level)) == whole


def test_header_errors():
    good = ct.write_archive([b"x"], ArchiveManifest(kernel=KernelId.NONE))
    with pytest.raises(BadMagic):
        ct.read_archive(b"GZIP" + good[4:])
    with pytest.raises(BadMagic):
        ct.read_archive(b"")
    with pytest.raises(UnsupportedVersion):
        ct.read_archive(good[:4] + b"\x02" + good[5:])
    with pytest.raises(TruncatedArchive):
        ct.read_archive(good[:6])
    with pytest.raises(MalformedArchive):
        ct.read_archive(good[:6] + b"\x09" + good[7:])
    with pytest.raises(MalformedArchive):
        ct.read_archive(good[:7] + b"\x02" + good[8:])
    with pytest.raises(MalformedArchive):
        list(ct.read_archive(good + b"junk")[1])


def test_truncated_mid_block_names_block():
    data = b"".join(b"line %d value %d\n" % (i, i * 7) for i in range(3000))
    arc = compress_bytes(data, RunConfig(block_lines=1000, workers=1))
    manifest, start = ct.read_manifest(arc)
    spans = list(ct.block_spans(arc, start, 3))
    cut = arc[:spans[2][1] + spans[2][2] // 2]
    _, it = ct.read_archive(cut)
    got = []
    with pytest.raises(TruncatedArchive) as ei:
        for payload in it:
            got.append(payload)
    assert ei.value.block == 2
    assert len(got) == 2


def test_corrupt_block_is_isolated():
    data = b"".join(b"line %d value %d\n" % (i, i * 7) for i in range(3000))
    arc = bytearray(compress_bytes(data, RunConfig(block_lines=1000, workers=1)))
    _, start = ct.read_manifest(bytes(arc))
    spans = list(ct.block_spans(bytes(arc), start, 3))
    off, n = spans[1][1], spans[1][2]
    arc[off + n // 2] ^= 0xFF
    _, it = ct.read_archive(bytes(arc))
    first = next(it)
    with pytest.raises(KernelError) as ei:
        next(it)
    assert ei.value.block == 1
    third = ct.kernel_decompress(ct.get_kernel(KernelId.LZMA), bytes(arc[spans[2][1]:]), 2)
    assert first and third


def node_table() -> list[PatternSignature]:
    return [parse_key(b"<IDX=%d|CTX=node|LEN=4>" % i) for i in range(3)]


def test_table_round_trip_examples():
    assert ct.serialize_signature_table([]) == b"\x80"
    assert len(ct.deserialize_signature_table(b"\x80")) == 0
    t = ct.deserialize_signature_table(ct.serialize_signature_table(node_table()))
    assert [(s.ctx, s.idx, s.length) for s in t] == [(b"node", i, 4) for i in range(3)]
    odd = PatternSignature(Category.LONG_NUMERIC, ctx=b"a|b", idx=0, length=5)
    blob = ct.serialize_signature_table([odd])
    assert b"a|b" in blob
    assert list(ct.deserialize_signature_table(blob)) == [odd]


def test_table_all_categories():
    sigs = node_table() + [
        PatternSignature(Category.SHORT_NUMERIC, length=2),
        PatternSignature(Category.LONG_NUMERIC, length=7),
        PatternSignature(Category.COMPLEX_NUMERIC, ctx=None, runs=(2, 30), literals=(b"", b"-", b"")),
        PatternSignature(Category.ALPHANUMERIC, ctx=b"", special_sig=b"_"),
        PatternSignature(Category.NAMED, name="ipv4", layout=Layout.OCTETS4, ctx=b"IP"),
        PatternSignature(Category.NAMED, name="ts", layout=Layout.FIXED_RUNS, runs=(2,), literals=(b"", b"s")),
        PatternSignature(Category.VARIABLE),
    ]
    t = ct.deserialize_signature_table(ct.serialize_signature_table(SignatureTable(sigs)))
    assert list(t) == sigs


@pytest.mark.parametrize("blob", [b"", b"\x81", b"\x81\x09\x00", b"\x81\x02\x00",
                                  b"\x81\x02\x04\x85ab", b"\x81\x05\x20\xff"])
def test_table_errors(blob):
    with pytest.raises(MalformedTable):
        ct.deserialize_signature_table(blob)


def test_determinism_across_workers():
    from delog.corpora import loghub_sample

    data = loghub_sample("HDFS", 6000)
    digests = {hashlib.sha256(compress_bytes(data, RunConfig(block_lines=1000, workers=w))).hexdigest()
               for w in (1, 4)}
    assert len(digests) == 1


def test_kernel_lookup():
    assert ct.get_kernel("gzip").id is KernelId.GZIP
    assert KernelId.parse("LZMA") is KernelId.LZMA
    with pytest.raises(ValueError):
        KernelId.parse("zstd")
    with pytest.raises(KernelError):
        ct.get_kernel(9)


def test_lzma_window_rule():
    assert ct._window_for(1 << 20, 1 << 16) == 1 << 20
    assert ct._window_for(3 << 19, 1 << 16) == 3 << 19
    assert ct._window_for(1_000_000, 1 << 16) == 3 << 18
    assert ct._window_for(10, 1 << 16) == 1 << 16
    data = bytes(range(256)) * 4000
    assert decompress_bytes(compress_bytes(data, RunConfig(workers=1))) == data
