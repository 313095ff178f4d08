import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bf2filter.events import Label, LabeledStream, SensorGeometry, make_events
from bf2filter.exceptions import HistogramError, LabelError
from bf2filter.synth import NoiseSpec, gen_shot_noise, gen_support_pairs
from bf2filter.theory import (RateHistogram, SupportHistogram, dse_sweep, estimate_rate_histogram,
                              estimate_support_histogram, f1_from_confusion_identity, f1_predict,
                              fnr_predict, fpr_bf2, fpr_row, fpr_stcf, newest_support_age,
                              predict, query_time_fpr, rank_reports, PredictionReport, weighted_fpr)

G = SensorGeometry(64, 48)


def test_fpr_row_values():
    assert fpr_row(0, 1024, 4) == 0
    assert fpr_row(500, 1e18, 4) < 1e-50
    W = 4096
    assert fpr_row(math.ceil(W * math.log(2)), W, 4) == pytest.approx(0.0625, abs=1e-3)


def test_fpr_bf2_and_stcf_values():
    assert fpr_bf2(0, 4) == 0 and fpr_bf2(1, 4) == 1
    assert fpr_bf2(0.1, 2) == pytest.approx(0.19)
    assert fpr_stcf(0) == 0 and fpr_stcf(1) == 1
    assert fpr_stcf(0.1) == pytest.approx(0.56953279, abs=1e-8)


@given(st.integers(0, 10**5), st.integers(0, 10**5), st.sampled_from([64, 1024, 16384]),
       st.integers(1, 8))
def test_monotonicity(n1, n2, W, K):
    lo, hi = sorted((n1, n2))
    assert fpr_row(lo, W, K) <= fpr_row(hi, W, K)
    assert fpr_row(hi, 2 * W, K) <= fpr_row(hi, W, K)
    assert fpr_row(hi, W, K + 1) <= fpr_row(hi, W, K)
    p = fpr_row(hi, W, K)
    assert fpr_bf2(p, 2) <= fpr_bf2(p, 3) + 1e-15


def test_weighted_fpr_cases():
    W, D, K = 1024, 4, 4
    assert weighted_fpr(RateHistogram.point_mass(0), W, D, K) == 0
    for level, fn in (("bf2", lambda n: fpr_bf2(fpr_row(n, W, K), D)),
                      ("stcf", lambda n: fpr_stcf(fpr_bf2(fpr_row(n, W, K), D)))):
        assert weighted_fpr(RateHistogram.point_mass(300), W, D, K, level) == pytest.approx(fn(300))
        h = RateHistogram(np.eye(1, 201, 100).ravel() * 0.5 + np.eye(1, 201, 200).ravel() * 0.5)
        assert weighted_fpr(h, W, D, K, level) == pytest.approx(0.5 * (fn(100) + fn(200)))


def test_histogram_validation():
    with pytest.raises(HistogramError):
        RateHistogram([0.5, 0.4])
    with pytest.raises(HistogramError):
        RateHistogram([1.2, -0.2])
    with pytest.raises(HistogramError):
        SupportHistogram([10], [0.5], 0.4, 100)
    with pytest.raises(HistogramError):
        SupportHistogram([200], [1.0], 0.0, 100)


def test_rate_histogram_constant_and_empty():
    t = np.repeat(np.arange(50) * 100, 7) + np.tile(np.arange(7), 50)
    s = LabeledStream(G, make_events(np.zeros(350, int), np.zeros(350, int), t))
    h = estimate_rate_histogram(s, 100)
    assert h.probs[7] == 1.0 and h.probs.size == 8
    assert estimate_rate_histogram(LabeledStream(G), 100).probs.tolist() == [1.0]


def test_rate_histogram_counts_empty_bins():
    s = LabeledStream(G, make_events([0, 0], [0, 0], [0, 350]))
    h = estimate_rate_histogram(s, 100)
    assert h.probs.tolist() == [0.5, 0.5]


def test_rate_histogram_poisson():
    from scipy import stats
    lam, tau_row, nbins = 6.0, 1000, 10**4
    rate = lam / (tau_row * 1e-6) / G.n_pixels
    s = gen_shot_noise(NoiseSpec(G, rate, tau_row * nbins, seed=4))
    h = estimate_rate_histogram(s, tau_row)
    k = np.arange(max(h.probs.size, 40))
    p = np.zeros(k.size)
    p[:h.probs.size] = h.probs
    assert 0.5 * np.abs(p - stats.poisson.pmf(k, lam)).sum() < 0.05


def test_support_histogram_cases():
    iso = LabeledStream(G, make_events([1, 30, 60], [1, 30, 40], [0, 10, 20], None, [1, 1, 1]))
    h = estimate_support_histogram(iso, 1000)
    assert h.p_none == 1.0 and h.probs.size == 0
    pair = LabeledStream(G, make_events([5, 6], [5, 5], [100, 350], None, [0, 1]))
    h = estimate_support_histogram(pair, 1000)
    assert h.lags.tolist() == [250] and h.probs.tolist() == [1.0] and h.p_none == 0
    with pytest.raises(LabelError):
        estimate_support_histogram(LabeledStream(G, make_events([1], [1], [0])), 10)


def test_support_histogram_beyond_horizon_is_none():
    pair = LabeledStream(G, make_events([5, 6], [5, 5], [0, 5000], None, [0, 1]))
    assert estimate_support_histogram(pair, 1000).p_none == 1.0


def test_support_histogram_matches_generator():
    rng = np.random.default_rng(2)
    lags = np.floor(rng.exponential(600, 20000)).astype(np.int64)
    s = gen_support_pairs(SensorGeometry(346, 260), lags, isolation_us=10_000, seed=1)
    h = estimate_support_histogram(s, 10_000)
    edges = np.arange(0, 10_001, 250)
    got = np.array([h.mass_between(a - 1, b - 1) for a, b in zip(edges[:-1], edges[1:])])
    want = np.histogram(lags, edges)[0] / lags.size
    assert 0.5 * np.abs(got - want).sum() < 0.05
    assert h.p_none == pytest.approx((lags > 10_000).mean())


def test_newest_support_age():
    s = LabeledStream(G, make_events([5, 7, 6, 5], [5, 5, 5, 5], [0, 10, 30, 31]))
    assert newest_support_age(s).tolist() == [-1, -1, 20, 1]


def test_fnr_predict_cases():
    tr, D = 100, 4
    early = SupportHistogram([50, 120, 250], [0.2, 0.3, 0.5], 0.0, 1000)
    assert fnr_predict(early, D, tr) == 0
    last = SupportHistogram([310, 399, 400], [0.3, 0.3, 0.4], 0.0, 1000)
    assert fnr_predict(last, D, tr) == pytest.approx(1.0)
    lags = np.arange(1, 401)
    uniform = SupportHistogram(lags, np.full(400, 1 / 400), 0.0, 400)
    assert fnr_predict(uniform, D, tr) == pytest.approx(1 / D)
    with pytest.raises(HistogramError):
        fnr_predict(uniform, 8, 100)
    with_none = SupportHistogram([50, 700], [0.5, 0.25], 0.25, 1000)
    assert fnr_predict(with_none, D, tr) == pytest.approx(0.5)


def test_fnr_phase_boundary():
    h = SupportHistogram([350], [1.0], 0.0, 400)
    assert fnr_predict(h, 4, 100, boundary="phase") == pytest.approx(0.5)
    with pytest.raises(ValueError):
        fnr_predict(h, 4, 100, boundary="nearest")


def test_fnr_nonincreasing_in_window():
    rng = np.random.default_rng(0)
    lags = np.sort(rng.integers(1, 4000, 500))
    h = SupportHistogram(lags, np.full(500, 0.9 / 500), 0.1, 4000)
    values = [fnr_predict(h, D, 250) for D in range(2, 17)]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_f1_predict():
    assert f1_predict(0, 0, 10, 10) == 1
    assert f1_predict(1, 0.3, 10, 10) == 0
    assert f1_predict(0, 1, 50, 50) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        f1_predict(0, 0, 0, 5)


def test_f1_identity():
    assert f1_from_confusion_identity(5, 0, 0) == 1
    assert f1_from_confusion_identity(0, 2, 3) == 0
    assert f1_from_confusion_identity(50, 10, 30) == pytest.approx(100 / 140)
    p, r = 50 / 60, 50 / 80
    assert f1_from_confusion_identity(50, 10, 30) == pytest.approx(2 * p * r / (p + r))
    assert math.isnan(f1_from_confusion_identity(0, 0, 0))


@given(st.integers(0, 1000), st.integers(0, 1000), st.integers(1, 1000), st.integers(0, 1000))
def test_f1_predict_consistent_with_counts(tp, fp, n_pos_extra, tn):
    fn = n_pos_extra
    n_pos, n_neg = tp + fn, fp + tn
    if n_neg == 0:
        return
    fnr, fpr = fn / n_pos, fp / n_neg
    assert f1_predict(fnr, fpr, n_pos, n_neg) == pytest.approx(f1_from_confusion_identity(tp, fp, fn))


def _sample():
    rng = np.random.default_rng(0)
    lags = np.floor(rng.exponential(400, 3000)).astype(np.int64)
    pairs = gen_support_pairs(SensorGeometry(100, 80), lags, isolation_us=8000, seed=3)
    return pairs


def test_predict_and_dse_single_config():
    s = _sample()
    rep = predict(s, 4096, 4, 4, 1000)
    assert 0 <= rep.fpr <= 1 and 0 <= rep.fnr <= 1 and 0 <= rep.f1 <= 1
    ranked = dse_sweep(s, 4000, 4, [(4096, 4)])
    assert len(ranked) == 1 and (ranked[0].W, ranked[0].D) == (4096, 4)
    assert ranked[0].f1 == pytest.approx(rep.f1)
    with pytest.raises(LabelError):
        predict(s.relabel(None), 4096, 4, 4, 1000)


def test_dse_noise_free_ranks_by_fnr():
    s = _sample()
    signal_only = s.subset(s.labels == Label.SIGNAL)
    # without noise events every config has F1 = 2(1-FNR)/(2-FNR), monotone in FNR
    configs = [(1 << 14, 2), (1 << 13, 4), (1 << 12, 8)]
    ranked = dse_sweep(signal_only, 4000, 4, configs)
    fnrs = [r.fnr for r in ranked]
    assert fnrs == sorted(fnrs)


def test_rank_tie_break():
    a = PredictionReport(1024, 8, 4, 10, 0, 0, 0.9)
    b = PredictionReport(2048, 4, 4, 10, 0, 0, 0.9)
    c = PredictionReport(512, 4, 4, 10, 0, 0, 0.9)
    assert rank_reports([a, b, c]) == [c, b, a]


def test_query_time_fpr_below_bin_average():
    s = gen_shot_noise(NoiseSpec(SensorGeometry(346, 260), 5, 300_000, seed=1))
    h = estimate_rate_histogram(s, 1250)
    q = query_time_fpr(s, 4096, 4, 4, 1250)
    full = weighted_fpr(h, 4096, 4, 4)
    # the active row is on average only partly filled when searched
    assert 0.6 * full < q < 0.95 * full
