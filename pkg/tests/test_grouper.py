import re

import pytest
from hypothesis import given, strategies as st

from delog import codecs, grouper
from delog.container import deserialize_signature_table
from delog.grouper import BlockEncoder, Kind, Member
from delog.signatures import Category, Layout, Mode, PatternSignature, parse_key

e = codecs.elastic_encode


@pytest.mark.parametrize("key, kind", [
    (b"<LEN=2>", Kind.RAW_DIGITS),
    (b"<IDX=0|CTX=ts|LEN=13>", Kind.DELTA_NUMERIC),
    (b"<IDX=0|CTX=ts|LEN=18>", Kind.DELTA_NUMERIC),
    (b"<IDX=0|CTX=ts|LEN=19>", Kind.RAW_DIGITS),
    (rb"<CTX=v|STR=\d{1}.\d{1}.\d{1}>", Kind.RUN_COLUMNS),
    (b"<CTX=v|STR=_->", Kind.DICTIONARY),
    (b"<PAT=ipv4>", Kind.OCTETS4),
    (rb"<PAT=ts_hms|STR=\d{2}:\d{2}:\d{2}>", Kind.RUN_COLUMNS),
    (b"<VAR>", Kind.DICTIONARY),
])
def test_value_layout(key, kind):
    assert grouper.value_layout(parse_key(key))[0] is kind


def test_wide_runs_are_raw():
    sig = parse_key(rb"<STR=\d{25}-\d{3}>")
    assert grouper.value_layout(sig) == (Kind.RUN_COLUMNS, (False, True))


def test_append_examples():
    groups = {}
    sig = parse_key(b"<IDX=0|CTX=node|LEN=4>")
    grouper.append(groups, 0, sig, b"0123")
    assert list(groups[0].values) == [123]
    sig = parse_key(rb"<STR=\d{4}-\d{2}>")
    grouper.append(groups, 1, sig, b"2024-01")
    assert [list(c) for c in groups[1].columns] == [[2024], [1]]
    sig = parse_key(b"<STR=_->")
    grouper.append(groups, 2, sig, b"dev-abc")
    assert groups[2].ids_of == {b"dev-abc": 0}
    grouper.append(groups, 3, parse_key(b"<PAT=ipv4>"), b"10.0.0.255")
    assert [list(c) for c in groups[3].columns] == [[10], [0], [0], [255]]
    assert [g.count for g in groups.values()] == [1, 1, 1, 1]


def test_block_without_patterns():
    data = b"plain words only\n\tand more\r\n"
    block = BlockEncoder().encode(data)
    m = block.members
    assert [bytes(m[i]) for i in range(3, 7)] == [b""] * 4
    assert bytes(m[Member.INDEX]) == b""
    assert bytes(m[Member.MODIFIED_LOG]) == grouper.escape(data)
    assert block.line_count == 2


def test_constant_run_columns():
    block = BlockEncoder().encode(b"a 1.2.3\n" * 100)
    table = deserialize_signature_table(block.members[Member.SIGNATURES])
    assert len(table) == 1 and table[0].category is Category.COMPLEX_NUMERIC
    col = lambda v: e(v) + e(0) * 99
    assert bytes(block.members[Member.NUMERIC]) == col(1) + col(2) + col(3)
    index = grouper.deserialize_index(block.members[Member.INDEX])
    assert [(x.member, x.length, x.count) for x in index] == [(Member.NUMERIC, 100, 100)] * 3


def test_node_example_three_delta_groups():
    block = BlockEncoder().encode(b"node 0123 0124 0125 joined\n")
    table = deserialize_signature_table(block.members[Member.SIGNATURES])
    assert table.keys() == [b"<IDX=%d|CTX=node|LEN=4>" % i for i in range(3)]
    index = grouper.deserialize_index(block.members[Member.INDEX])
    assert [(x.signature_id, x.member, x.count) for x in index] == [
        (i, Member.NUMERIC, 1) for i in range(3)]
    assert bytes(block.members[Member.MODIFIED_LOG]) == b"node \x01\x80 \x01\x81 \x01\x82 joined\n"


def test_index_round_trip():
    entries = [grouper.IndexEntry(3, Member.DICT_IDS, 10, 5, 7),
               grouper.IndexEntry(300, Member.NUMERIC, 0, 1 << 40, 1)]
    assert grouper.deserialize_index(grouper.serialize_index(entries)) == entries
    assert grouper.serialize_index([]) == b""
    from delog.errors import MalformedBlob
    with pytest.raises(MalformedBlob):
        grouper.deserialize_index(grouper.serialize_index(entries) + b"\x80")


@given(st.binary(max_size=200))
def test_escape_bijection(data):
    assert grouper.unescape(grouper.escape(data)) == data
    esc = grouper.escape(data)
    assert esc.count(b"\x01") == data.count(b"\x01")
    assert re.search(rb"\x01[^\x00]|\x01$", esc) is None


@given(st.binary(max_size=50), st.binary(max_size=50))
def test_escape_is_injective(a, b):
    if a != b:
        assert grouper.escape(a) != grouper.escape(b)


def test_unescape_rejects_bare_sentinel():
    with pytest.raises(ValueError):
        grouper.unescape(b"a\x01")
    with pytest.raises(ValueError):
        grouper.unescape(b"a\x01\x81")


@given(st.text("0123456789", min_size=1, max_size=18))
def test_width_recovery(s):
    assert b"%0*d" % (len(s), int(s)) == s.encode()


def test_placeholder_never_starts_with_zero():
    for sid in (0, 1, 127, 128, 1 << 20):
        ph = grouper.placeholder(sid)
        assert ph[0] == 1 and ph[1] != 0


words = st.sampled_from([b"node", b"0123", b"01", b"1.2.3", b"x-1", b"10.1.2.3", b"12:00:00",
                         b"\x01", b"\x01\x00", b"7" * 22, b"a", b"ID=5", b"5,000"])
blocks = st.lists(st.lists(words, max_size=6).map(b" ".join), max_size=20).map(b"\n".join)


@given(blocks, st.sampled_from(list(Mode)))
def test_occurrence_conservation(data, mode):
    block = BlockEncoder(mode).encode(data)
    table = deserialize_signature_table(block.members[Member.SIGNATURES])
    index = grouper.deserialize_index(block.members[Member.INDEX])
    mod = bytes(block.members[Member.MODIFIED_LOG])
    placeholders = [0] * len(table)
    pos = 0
    while (i := mod.find(b"\x01", pos)) >= 0:
        if mod[i + 1] == 0:
            pos = i + 2
            continue
        sid, pos = codecs.elastic_decode(mod, i + 1)
        placeholders[sid] += 1
    counts = {}
    for x in index:
        counts.setdefault(x.signature_id, set()).add(x.count)
    assert {sid: {n} for sid, n in enumerate(placeholders) if n} == counts
    # members are partitioned by the index, in order, without gaps
    for member in (Member.NUMERIC, Member.DICT_KEYS, Member.DICT_IDS, Member.RAW_DIGITS):
        spans = [(x.offset, x.length) for x in index if x.member is member]
        pos = 0
        for off, n in spans:
            assert off == pos
            pos += n
        assert pos == len(block.members[member])


def test_group_purity():
    block = BlockEncoder(Mode.DELOG_L).encode(b"a 1.22 3.44 5.6\nb 10.2.3.4 10.20.3.4\n")
    keys = deserialize_signature_table(block.members[Member.SIGNATURES]).keys()
    assert keys == [rb"<CTX=a|STR=\d{1}.\d{2}>", rb"<CTX=a|STR=\d{1}.\d{1}>",
                    rb"<CTX=b|STR=\d{2}.\d{1}.\d{1}.\d{1}>", rb"<CTX=b|STR=\d{2}.\d{2}.\d{1}.\d{1}>"]


def test_encoded_block_round_trip():
    block = BlockEncoder().encode(b"x 1\ny 22\n")
    back = grouper.EncodedBlock.from_bytes(block.to_bytes())
    assert back.line_count == 2
    assert [bytes(m) for m in back.members] == [bytes(m) for m in block.members]
    assert b"".join(block.to_parts()) == block.to_bytes()
    from delog.errors import MalformedStream
    with pytest.raises(MalformedStream):
        grouper.EncodedBlock.from_bytes(block.to_bytes() + b"x")


def test_named_fixed_runs_group():
    sig = PatternSignature(Category.NAMED, name="ts_hms", layout=Layout.FIXED_RUNS,
                           runs=(2, 2, 2), literals=(b"", b":", b":", b""))
    g = grouper.new_group(0, sig)
    g.add(b"09:05:01")
    assert g.encode() == [(Member.NUMERIC, e(9)), (Member.NUMERIC, e(5)), (Member.NUMERIC, e(1))]
