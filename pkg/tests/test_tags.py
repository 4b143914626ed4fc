import os
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twinlab.exceptions import (BadMagic, EmptyChannel, NonPositiveDuration, ParseError, TruncatedRecord,
                                UnknownChannel, UnsortedInput, UnsupportedVersion)
from twinlab.tags import (HEADER, MAGIC, RECORD_DTYPE, TagStream, check_stream, decode_binary, encode_binary,
                          merge_sorted, read_tags, write_tags)


def _stream(pairs, duration=10 ** 6):
    ch = np.array([c for c, _ in pairs], dtype=np.uint8)
    ts = np.array([t for _, t in pairs], dtype=np.int64)
    return TagStream(ch, ts, duration)


@st.composite
def streams(draw):
    n = draw(st.integers(0, 200))
    ts = np.sort(np.array(draw(st.lists(st.integers(0, 2 ** 40), min_size=n, max_size=n)), dtype=np.int64))
    ch = np.array(draw(st.lists(st.integers(0, 3), min_size=n, max_size=n)), dtype=np.uint8)
    duration = int(ts[-1]) + 1 if n else 1
    return TagStream(ch, ts, duration + draw(st.integers(0, 1000)))


def test_record_layout_is_bit_exact(tmp_path):
    s = _stream([(1, 5), (0, 7), (3, 2 ** 40)], duration=2 ** 41)
    path = tmp_path / "t.bin"
    write_tags(path, s)
    raw = path.read_bytes()
    assert raw[:4] == b"TTG1"
    magic, version, resolution, n_channels, duration = struct.unpack_from("<4sHIBQ", raw)
    assert (version, resolution, n_channels, duration) == (1, 1, 4, 2 ** 41)
    assert HEADER.size == 19 and RECORD_DTYPE.itemsize == 12
    body = raw[HEADER.size:]
    assert len(body) == 3 * 12
    assert body[:12] == bytes([1, 0, 0, 0]) + (5).to_bytes(8, "little", signed=True)
    assert body[24:36] == bytes([3, 0, 0, 0]) + (2 ** 40).to_bytes(8, "little", signed=True)


@settings(max_examples=40, deadline=None)
@given(streams())
def test_binary_round_trip(s):
    assert decode_binary(encode_binary(s)) == s


@settings(max_examples=20, deadline=None)
@given(streams())
def test_csv_round_trip(tmp_path_factory, s):
    path = tmp_path_factory.mktemp("csv") / "t.csv"
    write_tags(path, s, format="csv")
    assert read_tags(path) == s


def test_csv_and_binary_agree_on_three_tags(tmp_path):
    s = _stream([(0, 100), (1, 150), (0, 400)], duration=1000)
    write_tags(tmp_path / "a.bin", s)
    write_tags(tmp_path / "a.csv", s, format="csv")
    a, b = read_tags(tmp_path / "a.bin"), read_tags(tmp_path / "a.csv")
    assert a == b == s
    np.testing.assert_array_equal(a.channels, b.channels)


def test_truncated_record_reports_offset():
    data = encode_binary(_stream([(0, 1), (1, 2), (0, 3)]))
    with pytest.raises(TruncatedRecord) as err:
        decode_binary(data[:-5])
    assert err.value.offset == HEADER.size + 2 * 12


def test_bad_magic_and_version():
    data = bytearray(encode_binary(_stream([(0, 1)])))
    with pytest.raises(BadMagic):
        decode_binary(b"XXXX" + bytes(data[4:]))
    data[4:6] = (2).to_bytes(2, "little")
    with pytest.raises(UnsupportedVersion):
        decode_binary(bytes(data))


def test_unsorted_input_rejected_on_write_and_read():
    s = TagStream(np.array([0, 1], np.uint8), np.array([10, 5], np.int64), 100)
    with pytest.raises(UnsortedInput):
        encode_binary(s)
    header = HEADER.pack(MAGIC, 1, 1, 2, 100)
    rec = np.zeros(2, RECORD_DTYPE)
    rec["timestamp"] = [10, 5]
    with pytest.raises(UnsortedInput):
        decode_binary(header + rec.tobytes())


def test_csv_parse_errors_carry_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# duration_ps: 100\n0,5\n1,x\n")
    with pytest.raises(ParseError) as err:
        read_tags(path)
    assert err.value.line == 3


def test_atomic_write_leaves_no_temp_files(tmp_path):
    write_tags(tmp_path / "a.bin", _stream([(0, 1)]))
    assert os.listdir(tmp_path) == ["a.bin"]


def test_merge_sorted_orders_by_time_then_channel():
    ch, ts = merge_sorted(np.array([1, 0, 2, 0]), np.array([5, 5, 1, 9]))
    np.testing.assert_array_equal(ts, [1, 5, 5, 9])
    np.testing.assert_array_equal(ch, [2, 0, 1, 0])


def test_stream_validation():
    with pytest.raises(NonPositiveDuration):
        _stream([(0, 1)], duration=0)
    s = _stream([(0, 1)])
    with pytest.raises(UnknownChannel):
        check_stream(s, [5])
    declared = TagStream(np.array([0], np.uint8), np.array([1], np.int64), 10, n_channels=2)
    with pytest.raises(EmptyChannel):
        check_stream(declared, [1], require_events=True)


def test_empty_file_declares_channels(tmp_path):
    empty = TagStream(np.empty(0, np.uint8), np.empty(0, np.int64), 10 ** 9, n_channels=2)
    write_tags(tmp_path / "e.bin", empty)
    back = read_tags(tmp_path / "e.bin")
    assert len(back) == 0 and back.channel_ids == [0, 1]
