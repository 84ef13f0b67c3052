"""Uniform fit/forecast wrappers around every model family.

A forecaster is fitted on the training values of a uniform series and then
produces a closed-loop forecast of any horizon continuing right after them.
"""

from __future__ import annotations

import numpy as np

from .arima import ArimaModel, ArimaOrder, arima_fit, arima_forecast, arima_select
from .neural.networks import DEFAULT_WINDOW, Network, build_network
from .neural.training import TrainConfig, TrainHistory, derive_seed, predict_recursive
from .neural.training import train as train_network
from .series import ScaleParams, UniformSeries
from .windows import make_windows

MODEL_NAMES = {"lstm": "LSTM", "rnn": "RNN", "mlp": "MLP", "arima": "ARIMA",
               "persistence": "PERSISTENCE"}


class Forecaster:
    name = "BASE"

    def fit(self, train: UniformSeries) -> "Forecaster":
        raise NotImplementedError

    def forecast(self, horizon: int) -> np.ndarray:
        raise NotImplementedError


class PersistenceForecaster(Forecaster):
    """Repeats the last training value."""

    name = "PERSISTENCE"

    def fit(self, train):
        self.last = float(train.values[-1])
        return self

    def forecast(self, horizon):
        return np.full(horizon, self.last)


class ArimaForecaster(Forecaster):
    name = "ARIMA"

    def __init__(self, order: ArimaOrder | None = ArimaOrder(1, 1, 1), model: ArimaModel | None = None):
        # order None selects by AIC over p, q in [0, 3] and d in [0, 2]
        self.order = order
        self.model = model

    def fit(self, train):
        self.model = arima_select(train) if self.order is None else arima_fit(train, self.order)
        return self

    def forecast(self, horizon):
        return np.asarray(arima_forecast(self.model, horizon))


class NeuralForecaster(Forecaster):
    """Trains an LSTM, RNN or MLP on windows of the (optionally standardised) series.

    A training span with zero variance has nothing to learn; the forecaster
    then repeats that constant instead of training.
    """

    def __init__(self, kind: str = "lstm", profile: str = "tiny", window_len: int = DEFAULT_WINDOW,
                 config: TrainConfig | None = None, standardize: bool = True,
                 architecture: dict | None = None):
        self.kind = kind
        self.profile = profile
        self.window_len = window_len
        self.config = config or TrainConfig()
        self.standardize = standardize
        self.architecture = architecture or {}
        self.net: Network | None = None
        self.scale: ScaleParams | None = None
        self.history: TrainHistory | None = None
        self.constant: float | None = None
        self.seed_window: np.ndarray | None = None

    @property
    def name(self):
        return MODEL_NAMES[self.kind]

    def _scaled(self, values):
        values = np.asarray(values, dtype=np.float64)
        if self.scale is None:
            return values
        return (values - self.scale.mean) / self.scale.std

    def _unscaled(self, values):
        values = np.asarray(values, dtype=np.float64)
        if self.scale is None:
            return values
        return values * self.scale.std + self.scale.mean

    def fit(self, train):
        values = np.asarray(train.values, dtype=np.float64)
        std = float(np.std(values))
        if std == 0.0:
            self.constant = float(values[0])
            return self
        self.scale = ScaleParams(float(np.mean(values)), std) if self.standardize else None
        scaled = UniformSeries(train.start_epoch, train.step, self._scaled(values))
        data = make_windows(scaled, self.window_len)
        net = build_network(self.kind, self.profile, window_len=self.window_len,
                            seed=derive_seed(self.config.seed, f"init:{self.kind}"),
                            **self.architecture)
        self.net, self.history = train_network(net, data, self.config)
        self.seed_window = scaled.values[-self.window_len:].copy()
        return self

    def forecast(self, horizon, seed_window=None):
        """Closed-loop forecast; ``seed_window`` (unscaled) overrides the training tail."""
        if self.constant is not None:
            return np.full(horizon, self.constant)
        window = self.seed_window if seed_window is None else self._scaled(seed_window)
        return self._unscaled(predict_recursive(self.net, window, horizon))


def make_forecaster(name: str, *, profile: str = "tiny", seed: int = 0,
                    window_len: int = DEFAULT_WINDOW, config: TrainConfig | None = None,
                    standardize: bool = True, arima_order: ArimaOrder | None = ArimaOrder(1, 1, 1),
                    architecture: dict | None = None) -> Forecaster:
    name = name.lower()
    if name in ("lstm", "rnn", "mlp"):
        cfg = config or TrainConfig(seed=seed)
        arch = (architecture or {}).get(name, {})
        return NeuralForecaster(name, profile, window_len, cfg, standardize, arch)
    if name == "arima":
        return ArimaForecaster(arima_order)
    if name == "persistence":
        return PersistenceForecaster()
    raise ValueError(f"unknown model {name!r}; choose from {sorted(MODEL_NAMES)}")
