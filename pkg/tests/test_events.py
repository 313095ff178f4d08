import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bf2filter.events import (UNLABELED, Event, Label, LabeledStream, SensorGeometry, from_events,
                              load_stream, make_events, mix_streams, save_stream, validate)
from bf2filter.exceptions import GeometryError, OrderError, ParseError, StreamIOError

from conftest import random_stream


def write(path, text):
    path.write_text(text)
    return path


def test_geometry_parse_and_bounds():
    assert SensorGeometry.parse("346x260") == SensorGeometry(346, 260)
    assert str(SensorGeometry(640, 480)) == "640x480"
    with pytest.raises(GeometryError):
        SensorGeometry(2, 10)
    with pytest.raises(GeometryError):
        SensorGeometry.parse("346by260")


def test_empty_csv_gives_empty_stream(tmp_path, geom):
    s = load_stream(write(tmp_path / "e.csv", "x,y,t,p\n"), geometry=geom)
    assert len(s) == 0


def test_single_record(tmp_path, geom):
    s = load_stream(write(tmp_path / "one.csv", "x,y,t,p\n10,20,1000,1\n"), geometry=geom)
    assert list(s) == [Event(10, 20, 1000, 1, None)]


def test_out_of_range_x(tmp_path, geom):
    with pytest.raises(GeometryError):
        load_stream(write(tmp_path / "bad.csv", "x,y,t,p\n346,0,5,1\n"), geometry=geom)


def test_decreasing_time_needs_sort(tmp_path, geom):
    path = write(tmp_path / "u.csv", "x,y,t,p\n1,1,50,1\n2,2,10,0\n")
    with pytest.raises(OrderError):
        load_stream(path, geometry=geom)
    s = load_stream(path, geometry=geom, sort=True)
    assert s.t.tolist() == [10, 50]


@pytest.mark.parametrize("body", ["1,2,3\n", "1,2,x,1\n", "1,2,3,4\n", "1,2,3,1,7\n"])
def test_malformed_records(tmp_path, geom, body):
    header = "x,y,t,p,label\n" if body.count(",") == 4 else "x,y,t,p\n"
    with pytest.raises(ParseError):
        load_stream(write(tmp_path / "m.csv", header + body), geometry=geom)


def test_csv_geometry_comment_used_when_not_given(tmp_path):
    s = load_stream(write(tmp_path / "g.csv", "# geometry=20x10\nx,y,t,p\n19,9,0,0\n"))
    assert s.geometry == SensorGeometry(20, 10)
    with pytest.raises(GeometryError):
        load_stream(write(tmp_path / "n.csv", "x,y,t,p\n1,1,0,0\n"))


def test_mix_cases(geom):
    one = lambda t: LabeledStream(geom, make_events([1], [1], [t]))
    empty = LabeledStream(geom)
    s = mix_streams(one(7), empty)
    assert s.labels.tolist() == [Label.SIGNAL]
    n = mix_streams(empty, one(7))
    assert n.labels.tolist() == [Label.NOISE]
    m = mix_streams(one(5), one(3))
    assert m.t.tolist() == [3, 5]
    assert m.labels.tolist() == [Label.NOISE, Label.SIGNAL]


def test_mix_ties_put_signal_first_and_keep_order(geom):
    sig = LabeledStream(geom, make_events([1, 2], [0, 0], [4, 4]))
    noi = LabeledStream(geom, make_events([9, 8], [0, 0], [4, 4]))
    m = mix_streams(sig, noi)
    assert m.x.tolist() == [1, 2, 9, 8]


def test_mix_geometry_mismatch():
    with pytest.raises(GeometryError):
        mix_streams(LabeledStream(SensorGeometry(10, 10)), LabeledStream(SensorGeometry(11, 10)))


@pytest.mark.parametrize("fmt,suffix", [("csv", ".csv"), ("binary", ".bin")])
def test_round_trip_1000(tmp_path, geom, fmt, suffix):
    s = random_stream(geom, 1000, 10**9, seed=3)
    path = tmp_path / f"s{suffix}"
    save_stream(s, path, fmt)
    back = load_stream(path, fmt, geometry=geom)
    assert back == s
    if fmt == "binary":
        path2 = tmp_path / "again.bin"
        save_stream(back, path2, fmt)
        assert path.read_bytes() == path2.read_bytes()


def test_csv_and_binary_agree(tmp_path, geom):
    s = random_stream(geom, 200, 10**6, seed=4, labelled=False)
    save_stream(s, tmp_path / "a.csv")
    save_stream(s, tmp_path / "a.bin")
    assert load_stream(tmp_path / "a.csv", geometry=geom) == load_stream(tmp_path / "a.bin")


def test_binary_layout(tmp_path):
    g = SensorGeometry(4, 3)
    save_stream(LabeledStream(g, make_events([3], [2], [2**40 + 5], [1], [1])), tmp_path / "b.bin")
    raw = (tmp_path / "b.bin").read_bytes()
    assert raw[:4] == b"BF2E" and len(raw) == 32
    assert int.from_bytes(raw[4:6], "little") == 1
    assert (int.from_bytes(raw[6:8], "little"), int.from_bytes(raw[8:10], "little")) == (4, 3)
    rec = raw[16:]
    assert int.from_bytes(rec[0:2], "little") == 3 and int.from_bytes(rec[2:4], "little") == 2
    assert int.from_bytes(rec[4:12], "little") == 2**40 + 5
    assert rec[12] == 1 and rec[13] == 1


def test_unlabelled_binary_uses_255(tmp_path):
    g = SensorGeometry(4, 3)
    save_stream(LabeledStream(g, make_events([0], [0], [0])), tmp_path / "u.bin")
    assert (tmp_path / "u.bin").read_bytes()[16 + 13] == UNLABELED


def test_bad_binary(tmp_path):
    (tmp_path / "x.bin").write_bytes(b"NOPE" + bytes(12))
    with pytest.raises(ParseError):
        load_stream(tmp_path / "x.bin")
    (tmp_path / "y.bin").write_bytes(b"BF2E" + bytes(13))
    with pytest.raises(ParseError):
        load_stream(tmp_path / "y.bin")


def test_unwritable_path(geom, tmp_path):
    with pytest.raises(StreamIOError):
        save_stream(LabeledStream(geom), tmp_path / "missing" / "dir" / "s.csv")
    with pytest.raises(StreamIOError):
        load_stream(tmp_path / "nothing.csv", geometry=geom)


def test_validate_polarity(geom):
    ev = make_events([0], [0], [0], [2])
    with pytest.raises(ParseError):
        validate(LabeledStream(geom, ev))


def test_from_events_and_iteration(geom):
    evs = [Event(1, 2, 3, 0, Label.NOISE), Event(4, 5, 6, 1, Label.SIGNAL)]
    s = from_events(geom, evs)
    assert list(s) == evs and s.is_labeled
    assert s.count(Label.SIGNAL) == 1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 19), st.integers(0, 9), st.integers(0, 2**40),
                          st.integers(0, 1), st.sampled_from([0, 1])), max_size=50),
       st.lists(st.tuples(st.integers(0, 19), st.integers(0, 9), st.integers(0, 2**40),
                          st.integers(0, 1), st.sampled_from([0, 1])), max_size=50))
def test_mix_cardinality_and_order(a, b):
    g = SensorGeometry(20, 10)

    def mk(rows):
        rows = sorted(rows, key=lambda r: r[2])
        cols = list(zip(*rows)) if rows else [[]] * 5
        return LabeledStream(g, make_events(*cols[:4]))

    sa, sb = mk(a), mk(b)
    m = mix_streams(sa, sb)
    assert len(m) == len(a) + len(b)
    assert m.count(Label.SIGNAL) == len(a) and m.count(Label.NOISE) == len(b)
    assert np.all(np.diff(m.t.astype(np.int64)) >= 0)
