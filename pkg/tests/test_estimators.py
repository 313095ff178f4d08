import numpy as np
import pytest
from sklearn.base import clone

from bf2filter.estimators import (FILTER_KINDS, BafFilter, Bf2Filter, GuoStcfFilter, HashHeatFilter,
                                  OnfFilter, check_events, make_filter)
from bf2filter.events import Label, LabeledStream, SensorGeometry, make_events, mix_streams
from bf2filter.exceptions import ConfigError, GeometryError, LabelError, LengthError, OrderError, ParseError
from bf2filter.synth import EdgeSpec, NoiseSpec, SceneSpec, gen_scene, gen_shot_noise

G = SensorGeometry(64, 48)


@pytest.fixture(scope="module")
def mixed():
    scene = gen_scene(SceneSpec(G, (EdgeSpec("vertical", 0, 150, 3, (5, 40), 1000),), 150_000, 1))
    return mix_streams(scene, gen_shot_noise(NoiseSpec(G, 5, 150_000, seed=2)))


def _array(stream):
    e = stream.events
    return np.column_stack([e["x"], e["y"], e["t"], e["p"], e["label"]]).astype(np.int64)


def test_params_and_clone():
    f = Bf2Filter(tau=3000, W=2048)
    assert f.get_params()["W"] == 2048
    g = clone(f).set_params(tau=100)
    assert g.tau == 100 and f.tau == 3000
    assert set(make_filter("hashheat").get_params()) >= {"k", "m", "w", "thr", "aggregate"}
    for kind in FILTER_KINDS:
        assert make_filter(kind).kind == kind
    with pytest.raises(ConfigError):
        make_filter("median")


def test_invalid_params_raise_on_fit(mixed):
    with pytest.raises(ConfigError):
        Bf2Filter(W=1000).fit(mixed)
    with pytest.raises(ConfigError):
        Bf2Filter(clear_mode="lazy").fit(mixed)
    with pytest.raises(ConfigError):
        HashHeatFilter(aggregate="mean").fit(mixed)


def test_predict_requires_fit(mixed):
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        BafFilter().predict(mixed)


@pytest.mark.parametrize("cls", [Bf2Filter, BafFilter, GuoStcfFilter, OnfFilter, HashHeatFilter])
def test_stream_and_array_agree(cls, mixed):
    f = cls().fit(mixed)
    a = f.predict(mixed)
    arr = _array(mixed)
    b = cls(geometry=G).fit(arr).predict(arr)
    assert a.dtype == np.uint8 and np.array_equal(a, b)
    kept = f.transform(mixed)
    assert len(kept) == int(a.sum())
    assert f.transform(arr).shape == (int(a.sum()), 5)
    assert 0 <= f.score(mixed) <= 1


def test_fit_predict_and_score(mixed):
    f = Bf2Filter(tau=5000, W=8192)
    pred = f.fit_predict(mixed)
    truth = mixed.labels == Label.SIGNAL
    tp = np.sum((pred == 1) & truth)
    expected = 2 * tp / (2 * tp + np.sum((pred == 1) & ~truth) + np.sum((pred == 0) & truth))
    assert f.score(mixed) == pytest.approx(expected)
    assert f.score(mixed, truth) == pytest.approx(expected)
    with pytest.raises(LengthError):
        f.score(mixed, truth[:-1])
    with pytest.raises(LabelError):
        f.score(mixed.relabel(None))


def test_check_events_validation():
    assert check_events(np.array([[1, 2, 3]])).geometry == SensorGeometry(3, 3)
    assert check_events(np.array([[10, 2, 3, 1]])).geometry == SensorGeometry(11, 3)
    with pytest.raises(ParseError):
        check_events(np.zeros((3, 2)))
    with pytest.raises(ParseError):
        check_events(np.array([[1.5, 2, 3]]))
    with pytest.raises(ParseError):
        check_events(np.array([[-1, 2, 3]]))
    with pytest.raises(ParseError):
        check_events(np.array([[1, 2, 3, 2]]))
    with pytest.raises(GeometryError):
        check_events(np.empty((0, 3), int))
    with pytest.raises(GeometryError):
        check_events(np.array([[70, 2, 3]]), G)
    with pytest.raises(OrderError):
        check_events(np.array([[1, 1, 5], [1, 1, 4]]), G)
    s = check_events(np.array([[1, 1, 5], [2, 1, 4]]), G, sort=True)
    assert s.t.tolist() == [4, 5]
    stream = LabeledStream(G, make_events([1], [1], [0]))
    with pytest.raises(GeometryError):
        check_events(stream, SensorGeometry(10, 10))
    assert check_events(stream, "64x48") is not None


def test_sorted_transform_returns_time_order():
    arr = np.array([[1, 1, 20, 1], [2, 1, 10, 1], [1, 2, 15, 1]])
    out = BafFilter(geometry=G, sort=True).fit(arr).transform(arr)
    assert out[:, 2].tolist() == [15, 20]


def test_baf_matches_guo_s1(mixed):
    a = BafFilter(tau=2000).fit(mixed).predict(mixed)
    b = GuoStcfFilter(tau=2000, s=1).fit(mixed).predict(mixed)
    assert np.array_equal(a, b)
