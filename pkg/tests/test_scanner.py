import numpy as np
import pytest
from hypothesis import given, strategies as st

from delog import scanner
from delog.scanner import ContextState, DelimiterRun, FeaturePool, Token
from delog.signatures import Category, category_of

lines = st.binary(max_size=200).map(lambda b: b.replace(b"\n", b""))
texts = st.lists(lines, max_size=20).map(b"\n".join)


def is_keyword(pool: FeaturePool) -> bool:
    return category_of(pool.flags, pool.token_length) is Category.KEYWORD


def tag_patterns(pool: FeaturePool):
    kw = is_keyword(pool)
    return (not kw, b"<%d>" % pool.token_index)


@pytest.mark.parametrize("b, expected", [(0x20, True), (0x09, True), (0x0D, True),
                                         (ord("a"), False), (0x0A, False), (0x00, False)])
def test_is_delimiter(b, expected):
    assert scanner.is_delimiter(b) is expected


@pytest.mark.parametrize("b, expected", [(ord(":"), True), (ord("_"), True), (0x01, True),
                                         (ord("7"), False), (ord("Z"), False), (0xE6, False)])
def test_is_ascii_special(b, expected):
    assert scanner.is_ascii_special(b) is expected


@pytest.mark.parametrize("token, expected", [
    (b"19:23:23,456", (b"192323456", b"::,", 12)),
    (b"node", (b"node", b"", 4)),
    (b"node_1", (b"node1", b"_", 6)),
    (b"\xe6\x97\xa5-1", (b"\xe6\x97\xa51", b"-", 5)),
])
def test_split_token(token, expected):
    assert scanner.split_token(token) == expected


def test_scan_line_node_example():
    state = ContextState()
    seen = []

    def classify(pool):
        seen.append((pool.current_token, pool.semantic_context, pool.token_index))
        return tag_patterns(pool)

    out = scanner.scan_line(b"node 0123 joined", state, classify)
    assert out == b"node <0> joined"
    assert (state.context, state.token_index) == (b"joined", 0)
    assert seen[1] == (b"0123", b"node", 0)


def test_context_never_becomes_a_number():
    state = ContextState()
    seen = []

    def classify(pool):
        seen.append((pool.semantic_context, pool.token_index))
        return tag_patterns(pool)

    scanner.scan_line(b"node 0123 0124 0125 joined", state, classify)
    assert seen[1:4] == [(b"node", 0), (b"node", 1), (b"node", 2)]


def test_scan_line_empty_and_escaping():
    state = ContextState(b"x", 3)
    assert scanner.scan_line(b"", state, tag_patterns) == b""
    assert (state.context, state.token_index) == (b"x", 3)
    assert scanner.scan_line(b"a\x01b  c", ContextState(), tag_patterns) == b"<0>  c"
    assert scanner.scan_line(b"\x01 ok", ContextState(), lambda p: (False, b"")) == b"\x01\x00 ok"
    with pytest.raises(ValueError):
        scanner.scan_line(b"a\nb", ContextState(), tag_patterns)


def _events_bytes(events) -> bytes:
    return b"".join(e.bytes if isinstance(e, DelimiterRun) else e.pool.current_token for e in events)


@given(texts)
def test_events_reconstruct_lines(data):
    got = [_events_bytes(ev) for ev in scanner.iter_line_events(data, is_keyword)]
    expected = data.split(b"\n") if data else []
    if data.endswith(b"\n"):
        expected.pop()
    assert got == expected


@given(texts)
def test_pool_fields_consistent(data):
    for events in scanner.iter_line_events(data, is_keyword):
        for e in events:
            if isinstance(e, Token):
                p = e.pool
                assert scanner.split_token(p.current_token) == (
                    p.general_content, p.ascii_special, p.token_length)
                assert p.flags == scanner.token_flags(p.current_token)
                assert not any(scanner.is_delimiter(b) for b in p.current_token)


@given(texts)
def test_context_rule(data):
    for events in scanner.iter_line_events(data, is_keyword):
        ctx, idx = b"", 0
        for e in (e for e in events if isinstance(e, Token)):
            assert (e.pool.semantic_context, e.pool.token_index) == (ctx, idx)
            if is_keyword(e.pool):
                ctx, idx = e.pool.current_token, 0
            else:
                idx += 1


@given(texts, st.integers(1, 64))
def test_chunking_does_not_change_tokens(data, chunk):
    def flat(chunks):
        out = []
        for ch in chunks:
            out += list(zip(ch.tok_start, ch.tok_end, ch.tok_flags))
        return out

    assert flat(scanner.scan_chunks(data, chunk_bytes=chunk)) == flat(scanner.scan_chunks(data))


@given(texts)
def test_every_byte_read_once(data):
    reads = np.zeros(len(data), np.int32)
    list(scanner.scan_chunks(data, reads, chunk_bytes=16))
    assert (reads == 1).all()


def test_reads_counter_shape_checked():
    with pytest.raises(ValueError):
        list(scanner.scan_chunks(b"abc", np.zeros(2, np.int32)))


def test_crlf_kept_as_delimiter():
    events = next(scanner.iter_line_events(b"a 1\r\n", is_keyword))
    assert events[-1] == DelimiterRun(b"\r")
    assert _events_bytes(events) == b"a 1\r"


def test_long_line_is_not_truncated():
    line = b"x" * 3_000_000 + b" 42"
    events = next(scanner.iter_line_events(line, is_keyword))
    assert events[0].pool.token_length == 3_000_000
    assert events[-1].pool.current_token == b"42"
