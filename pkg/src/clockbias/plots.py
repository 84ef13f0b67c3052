"""Matplotlib figures for comparison reports.

Rendering is headless (Agg) and only happens when a CLI run asks for
figures; the CSV outputs never depend on it.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.dpi": 120,
}
COLORS = {"LSTM": "C0", "RNN": "C1", "MLP": "C2", "ARIMA": "C3", "PERSISTENCE": "0.4"}


def _figure(ncols=1, width=6.4, height=3.6):
    with plt.rc_context(STYLE):
        return plt.subplots(ncols=ncols, figsize=(width, height))


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    # no timestamp in the metadata keeps reruns byte-stable
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_error_series(reports, path, title=None) -> Path:
    """Prediction error against days since the start of the test span."""
    fig, ax = _figure()
    for r in reports:
        if not r.error_series:
            continue
        e = np.asarray(r.error_series)
        days = (e[:, 0] - e[0, 0]) / 86400.0
        ax.plot(days, e[:, 1], lw=0.8, label=r.model, color=COLORS.get(r.model))
    ax.set_xlabel("days into test span")
    ax.set_ylabel("true - predicted (s)")
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    return _save(fig, path)


def plot_forecast(epochs, true, pred, path, label="forecast") -> Path:
    fig, ax = _figure()
    days = (np.asarray(epochs) - epochs[0]) / 86400.0
    ax.plot(days, true, lw=0.8, color="k", label="true")
    ax.plot(days, pred, lw=0.8, color="C0", label=label)
    ax.set_xlabel("days into test span")
    ax.set_ylabel("value (s)")
    ax.legend(loc="best")
    return _save(fig, path)


def plot_rmse_table(reports, path) -> Path:
    """Grouped log-scale RMSE bars: one group per frame, one bar per model."""
    frames = sorted({r.time_frame for r in reports})
    models = sorted({r.model for r in reports})
    fig, ax = _figure(width=7.0)
    width = 0.8 / max(len(models), 1)
    x = np.arange(len(frames))
    for k, model in enumerate(models):
        vals = []
        for f in frames:
            hit = [r for r in reports if r.model == model and r.time_frame == f and r.metrics]
            vals.append(hit[0].metrics.rmse if hit else np.nan)
        ax.bar(x + k * width, vals, width, label=model, color=COLORS.get(model))
    ax.set_xticks(x + width * (len(models) - 1) / 2)
    ax.set_xticklabels([f"{f:g} d" for f in frames])
    ax.set_yscale("log")
    ax.set_ylabel("RMSE (s)")
    ax.legend(loc="best", ncols=min(len(models), 5))
    return _save(fig, path)
