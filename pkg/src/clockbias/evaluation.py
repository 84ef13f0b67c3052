"""Splitting, metrics, prediction-error series and the multi-model comparison."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import AllSkipped, ClockBiasError, EmptyInput, InsufficientSpan, LengthMismatch
from .forecasters import MODEL_NAMES, make_forecaster
from .ingest import format_epoch, format_value
from .series import UniformSeries
from .windows import WindowedDataset, make_windows  # noqa: F401  (re-exported)

log = logging.getLogger(__name__)

DAY = 86400.0
MAPE_EPS = 1e-15
REPORT_HEADER = "model,time_frame_days,rmse,mae,mape_pct,n,skipped"
PLOT_HEADER = "epoch_s,model,error_s"
DOMAINS = ("difference", "bias")


@dataclass(frozen=True)
class SplitSpec:
    train_duration: float
    total_duration: float

    def __post_init__(self):
        if not 0 < self.train_duration < self.total_duration:
            raise ValueError("need 0 < train_duration < total_duration")

    @classmethod
    def days(cls, train_days: float, total_days: float) -> "SplitSpec":
        return cls(train_days * DAY, total_days * DAY)


@dataclass(frozen=True)
class Metrics:
    rmse: float
    mae: float
    mape: float
    n: int
    skipped: int


@dataclass
class ForecastReport:
    model: str
    time_frame: float
    metrics: Metrics | None
    error_series: list[tuple[float, float]] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def split_by_duration(u: UniformSeries, spec: SplitSpec) -> tuple[UniformSeries, UniformSeries]:
    """Cut the first ``total_duration`` of ``u`` at ``start + train_duration``.

    A sample exactly on the cut belongs to the test part. The series must
    cover ``total_duration``, counting one step per sample.
    """
    span = u.end_epoch - u.start_epoch
    if span < spec.total_duration or spec.train_duration >= span:
        raise InsufficientSpan(
            f"series covers {span / DAY:g} days, frame needs {spec.total_duration / DAY:g}")
    epochs = u.epochs
    cut = u.start_epoch + spec.train_duration
    end = u.start_epoch + spec.total_duration
    n_train = int(np.count_nonzero(epochs < cut))
    n_total = int(np.count_nonzero(epochs < end))
    if n_train < 1 or n_total - n_train < 1:
        raise InsufficientSpan("split leaves an empty train or test part")
    train = UniformSeries(u.start_epoch, u.step, u.values[:n_train])
    test = UniformSeries(u.start_epoch + n_train * u.step, u.step, u.values[n_train:n_total])
    return train, test


def _pair(true, pred) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(true, dtype=np.float64).reshape(-1)
    p = np.asarray(pred, dtype=np.float64).reshape(-1)
    if t.size != p.size:
        raise LengthMismatch(f"{t.size} true values vs {p.size} predictions")
    if t.size == 0:
        raise EmptyInput("no values to score")
    return t, p


def compute_metrics(true, pred, eps: float = MAPE_EPS, allow_all_skipped: bool = False) -> Metrics:
    """RMSE, MAE and MAPE (percent) of ``true - pred``.

    MAPE averages only over references with ``|true| > eps``; the excluded
    count is reported as ``skipped``. If every reference is excluded MAPE is
    undefined: ``AllSkipped`` is raised, or NaN returned when
    ``allow_all_skipped``.
    """
    t, p = _pair(true, pred)
    err = t - p
    rmse = math.sqrt(float(np.mean(err * err)))
    mae = float(np.mean(np.abs(err)))
    keep = np.abs(t) > eps
    skipped = int(t.size - np.count_nonzero(keep))
    if not np.any(keep):
        if not allow_all_skipped:
            raise AllSkipped("every reference value is within the MAPE zero guard")
        mape = math.nan
    else:
        mape = 100.0 * float(np.mean(np.abs(err[keep]) / np.abs(t[keep])))
    return Metrics(rmse, mae, mape, int(np.count_nonzero(keep)), skipped)


def error_series(true, pred, epochs) -> list[tuple[float, float]]:
    t, p = _pair(true, pred)
    e = np.asarray(epochs, dtype=np.float64).reshape(-1)
    if e.size != t.size:
        raise LengthMismatch("epochs and values differ in length")
    return [(float(a), float(b)) for a, b in zip(e, t - p)]


def to_domain(values, domain: str, anchor: float | None) -> np.ndarray:
    """Difference-domain values, or bias restored by cumulative sum from ``anchor``."""
    values = np.asarray(values, dtype=np.float64)
    if domain == "difference":
        return values
    if domain == "bias":
        if anchor is None:
            raise ValueError("the bias domain needs the base bias value")
        return anchor + np.cumsum(values)
    raise ValueError(f"unknown domain {domain!r}; choose from {DOMAINS}")


def _sort_key(report: ForecastReport):
    rmse = report.metrics.rmse if report.metrics is not None else math.inf
    return (math.isnan(rmse), rmse, report.model)


def _fit(name: str, factory, train: UniformSeries):
    try:
        return factory(name).fit(train), None
    except (ClockBiasError, ValueError, FloatingPointError) as exc:
        log.warning("model %s failed to fit: %s", name, exc)
        return None, f"{type(exc).__name__}: {exc}"


def compare_frames(u: UniformSeries, frames_days, train_days: float, models=("lstm", "rnn", "mlp", "arima"),
                   *, domain: str = "difference", base_value: float | None = None,
                   workers: int = 1, **forecaster_options) -> list[ForecastReport]:
    """Fit every model once on the shared training span and score each frame.

    The closed-loop forecast of the longest frame is computed once; shorter
    frames score its prefix, which is what an independent fit per frame
    would produce. A PERSISTENCE row is always added. Reports are grouped by
    frame in the given order, then sorted by RMSE ascending.
    """
    frames_days = [float(f) for f in frames_days]
    specs = [SplitSpec.days(train_days, f) for f in frames_days]
    names = [m.lower() for m in models if m.lower() != "persistence"] + ["persistence"]

    splits = [split_by_duration(u, spec) for spec in specs]
    train = splits[0][0]
    longest = max(range(len(specs)), key=lambda k: len(splits[k][1]))
    horizon = len(splits[longest][1])
    test_all = splits[longest][1]
    anchor = None if base_value is None else base_value + float(np.sum(train.values))

    def factory(name):
        return make_forecaster(name, **forecaster_options)

    def run(name):
        fitted, err = _fit(name, factory, train)
        if fitted is None:
            return name, None, err
        try:
            pred = np.asarray(fitted.forecast(horizon), dtype=np.float64)
            if not np.all(np.isfinite(pred)):
                return name, None, "NonFiniteValue: forecast diverged"
            return name, pred, None
        except (ClockBiasError, ValueError, FloatingPointError) as exc:
            return name, None, f"{type(exc).__name__}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, names))
    else:
        results = [run(name) for name in names]

    true_full = to_domain(test_all.values, domain, anchor)
    epochs_full = test_all.epochs
    reports = []
    for frame, (_, test) in zip(frames_days, splits):
        n = len(test)
        frame_reports = []
        for name, pred, err in results:
            label = MODEL_NAMES[name]
            if pred is None:
                frame_reports.append(ForecastReport(label, frame, None, [], err))
                continue
            p = to_domain(pred, domain, anchor)[:n]
            t = true_full[:n]
            metrics = compute_metrics(t, p, allow_all_skipped=True)
            frame_reports.append(ForecastReport(label, frame, metrics,
                                                error_series(t, p, epochs_full[:n])))
        reports.extend(sorted(frame_reports, key=_sort_key))
    return reports


def compare_models(u: UniformSeries, spec: SplitSpec, models=("lstm", "rnn", "mlp", "arima"),
                   **options) -> list[ForecastReport]:
    """Single-frame comparison; see ``compare_frames``."""
    return compare_frames(u, [spec.total_duration / DAY], spec.train_duration / DAY, models, **options)


def forecast_report(name: str, frame_days: float, true, pred, epochs) -> ForecastReport:
    metrics = compute_metrics(true, pred, allow_all_skipped=True)
    return ForecastReport(name, frame_days, metrics, error_series(true, pred, epochs))


# ---------------------------------------------------------------- CSV out


def _num(value: float) -> str:
    return "nan" if value is None or math.isnan(value) else format_value(value)


def _frame(days: float) -> str:
    return str(int(days)) if float(days).is_integer() else repr(float(days))


def reports_to_csv(reports: list[ForecastReport]) -> str:
    rows = [REPORT_HEADER]
    for r in reports:
        m = r.metrics
        if m is None:
            rows.append(f"{r.model},{_frame(r.time_frame)},nan,nan,nan,0,0")
        else:
            rows.append(f"{r.model},{_frame(r.time_frame)},{_num(m.rmse)},{_num(m.mae)},"
                        f"{_num(m.mape)},{m.n},{m.skipped}")
    return "\n".join(rows) + "\n"


def plot_data_to_csv(reports: list[ForecastReport]) -> str:
    rows = [PLOT_HEADER]
    for r in reports:
        rows.extend(f"{format_epoch(e)},{r.model},{format_value(v)}" for e, v in r.error_series)
    return "\n".join(rows) + "\n"
