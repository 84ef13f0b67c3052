import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clockbias.errors import AllSkipped, EmptyInput, InsufficientSpan, LengthMismatch, TooShort
from clockbias.evaluation import (
    PLOT_HEADER,
    REPORT_HEADER,
    ForecastReport,
    SplitSpec,
    compare_frames,
    compare_models,
    compute_metrics,
    error_series,
    plot_data_to_csv,
    reports_to_csv,
    split_by_duration,
    to_domain,
)
from clockbias.forecasters import NeuralForecaster, PersistenceForecaster, make_forecaster
from clockbias.neural.training import TrainConfig
from clockbias.series import UniformSeries
from clockbias.windows import make_windows

from oracles import naive_metrics

DAY = 86400


def uniform(days, value=lambda t: np.sin(t / 3600.0), step=600.0):
    n = int(days * DAY / step)
    return UniformSeries(0.0, step, value(np.arange(n) * step))


def test_make_windows_too_short():
    with pytest.raises(TooShort):
        make_windows(UniformSeries(0.0, 1.0, [1.0, 2.0]), 2)


def test_split_counts():
    train, test = split_by_duration(uniform(31), SplitSpec.days(4, 31))
    assert len(train) == 576 and len(test) == 31 * 144 - 576
    assert test.start_epoch == 4 * DAY
    train, test = split_by_duration(uniform(7), SplitSpec.days(2, 7))
    assert len(train) == 288 and len(test) == 5 * 144


def test_split_uses_only_the_frame():
    train, test = split_by_duration(uniform(31), SplitSpec.days(2, 7))
    assert len(train) + len(test) == 7 * 144


def test_split_insufficient_span():
    with pytest.raises(InsufficientSpan):
        split_by_duration(uniform(5), SplitSpec.days(2, 7))
    with pytest.raises(ValueError):
        SplitSpec.days(7, 7)


def test_metrics_examples():
    m = compute_metrics([1, 2, 3], [2, 2, 2])
    assert m.rmse == pytest.approx(math.sqrt(2 / 3), abs=1e-12)
    assert m.mae == pytest.approx(2 / 3, abs=1e-12)
    assert m.mape == pytest.approx(100 * (1 + 0 + 1 / 3) / 3, abs=1e-12)
    assert (m.n, m.skipped) == (3, 0)
    same = compute_metrics([4.0, -1.0], [4.0, -1.0])
    assert (same.rmse, same.mae, same.mape) == (0.0, 0.0, 0.0)


def test_metrics_zero_guard():
    m = compute_metrics([0.0, 2.0], [1.0, 1.0])
    assert m.mape == 50.0 and m.skipped == 1 and m.n == 1
    with pytest.raises(AllSkipped):
        compute_metrics([0.0, 1e-16], [1.0, 1.0])
    assert math.isnan(compute_metrics([0.0], [1.0], allow_all_skipped=True).mape)


def test_metrics_errors():
    with pytest.raises(LengthMismatch):
        compute_metrics([1, 2], [1])
    with pytest.raises(EmptyInput):
        compute_metrics([], [])


vectors = st.integers(1, 60).flatmap(lambda n: st.tuples(
    st.lists(st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-3), min_size=n, max_size=n),
    st.lists(st.floats(-1e3, 1e3), min_size=n, max_size=n)))


@settings(max_examples=200, deadline=None)
@given(vectors)
def test_metrics_match_naive_reference(pair):
    t, p = pair
    m = compute_metrics(t, p)
    ref = naive_metrics(t, p)
    for got, want in zip((m.rmse, m.mae, m.mape), ref):
        assert got == pytest.approx(want, rel=1e-12, abs=1e-300)
    assert m.rmse >= m.mae


@settings(max_examples=100, deadline=None)
@given(vectors, st.floats(0.01, 100) | st.floats(-100, -0.01))
def test_metrics_invariances(pair, c):
    t, p = np.array(pair[0]), np.array(pair[1])
    a, b = compute_metrics(t, p), compute_metrics(-t, -p)
    assert (a.rmse, a.mae) == (b.rmse, b.mae)
    assert compute_metrics(c * t, c * p).mape == pytest.approx(a.mape, rel=1e-9, abs=1e-12)


def test_error_series():
    assert error_series([3.0], [1.0], [600.0]) == [(600.0, 2.0)]
    assert all(e == 0 for _, e in error_series([1.0, 2.0], [1.0, 2.0], [0.0, 1.0]))
    with pytest.raises(LengthMismatch):
        error_series([1.0], [1.0, 2.0], [0.0])


def test_to_domain():
    assert to_domain([1.0, 2.0], "difference", None).tolist() == [1.0, 2.0]
    assert to_domain([1.0, 2.0], "bias", 10.0).tolist() == [11.0, 13.0]
    with pytest.raises(ValueError):
        to_domain([1.0], "bias", None)


def test_persistence_forecaster():
    f = PersistenceForecaster().fit(UniformSeries(0.0, 1.0, [1.0, 5.0]))
    assert f.forecast(3).tolist() == [5.0, 5.0, 5.0]


def test_neural_forecaster_constant_fallback():
    f = NeuralForecaster("lstm").fit(UniformSeries(0.0, 1.0, np.full(50, 2e-10)))
    assert f.net is None and f.forecast(4).tolist() == [2e-10] * 4


def test_neural_forecaster_works_on_clock_scale():
    u = uniform(2, lambda t: 1e-10 * np.sin(2 * np.pi * t / 21600))
    f = make_forecaster("rnn", config=TrainConfig(seed=1, max_epochs=3)).fit(u)
    pred = f.forecast(10)
    assert np.all(np.isfinite(pred)) and np.max(np.abs(pred)) < 1e-9
    assert f.scale.std == pytest.approx(np.std(u.values))


def test_compare_on_constant_series():
    u = uniform(8, lambda t: np.full(t.shape, 3e-10))
    reports = compare_models(u, SplitSpec.days(2, 7), config=TrainConfig(max_epochs=2))
    assert len(reports) == 5
    for r in reports:
        assert r.ok and r.metrics.rmse == 0.0
    assert [r.model for r in reports] == sorted(r.model for r in reports)


def test_compare_always_adds_persistence_and_reports_failures():
    u = uniform(8)
    reports = compare_models(u, SplitSpec.days(2, 7), models=["mlp"],
                             config=TrainConfig(max_epochs=1), window_len=500)
    models = {r.model: r for r in reports}
    assert set(models) == {"MLP", "PERSISTENCE"}
    assert not models["MLP"].ok and "TooShort" in models["MLP"].error
    assert reports[0].model == "PERSISTENCE"
    csv = reports_to_csv(reports)
    assert "MLP,7,nan,nan,nan,0,0" in csv


def test_compare_frames_prefix_consistency():
    u = uniform(15, lambda t: 1e-10 * np.sin(2 * np.pi * t / 21600) + 1e-12 * t / 600)
    kw = dict(models=["arima"], config=TrainConfig(max_epochs=1))
    both = compare_frames(u, [7, 14], 2, **kw)
    single = compare_frames(u, [7], 2, **kw)
    pick = {(r.model, r.time_frame): r.metrics for r in both}
    for r in single:
        assert pick[(r.model, 7.0)] == r.metrics
    for r in both:
        assert len(r.error_series) == r.metrics.n + r.metrics.skipped


def test_compare_bias_domain():
    u = uniform(8, lambda t: np.full(t.shape, 1e-12))
    reports = compare_models(u, SplitSpec.days(2, 7), models=[], domain="bias", base_value=1e-4)
    (r,) = reports
    assert r.metrics.rmse == 0.0 and r.error_series[0][1] == 0.0


def test_csv_schema():
    reports = [ForecastReport("LSTM", 7.0, compute_metrics([1.0, 2.0], [1.5, 2.0]),
                              [(0.0, -0.5), (600.0, 0.0)])]
    lines = reports_to_csv(reports).splitlines()
    assert lines[0] == REPORT_HEADER
    assert lines[1] == "LSTM,7,0.3535533905932738,0.25,25.0,2,0"
    plot = plot_data_to_csv(reports).splitlines()
    assert plot == [PLOT_HEADER, "0,LSTM,-0.5", "600,LSTM,0.0"]
