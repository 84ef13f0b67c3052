"""Stacked networks: LSTM and RNN sequence models, and a flattened-window MLP.

Every network maps a batch of windows ``(batch, window_len, input_size)`` to
one scalar per window and exposes the same three hooks used by training:
``parameters()`` (live arrays keyed by name), ``forward`` and ``backward``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..errors import CacheMismatch, DimensionMismatch, EmptyWindow
from ..rng import SplitMix64
from .layers import (
    DenseLayerParams,
    LstmLayerParams,
    RnnLayerParams,
    dense_backward,
    dense_step,
    lstm_cell_backward,
    lstm_cell_forward,
    rnn_cell_backward,
    rnn_cell_step,
)

# Architecture profiles. Dense entries are hidden SELU widths; a linear
# 1-unit head is always appended.
PROFILES = {
    "full": {
        "lstm": {"units": (512, 256), "dense": (128, 64, 32)},
        "rnn": {"units": (64,), "dense": ()},
        "mlp": {"hidden": (64, 32)},
    },
    "tiny": {
        "lstm": {"units": (32, 16), "dense": (16, 8, 4)},
        "rnn": {"units": (64,), "dense": ()},
        "mlp": {"hidden": (64, 32)},
    },
}
DEFAULT_WINDOW = 12


def _dense_head(rng, in_size, hidden, zero=False):
    layers = []
    for width in hidden:
        layers.append(DenseLayerParams.zeros(in_size, width, "selu") if zero
                      else DenseLayerParams.glorot(rng, in_size, width, "selu"))
        in_size = width
    layers.append(DenseLayerParams.zeros(in_size, 1, "linear") if zero
                  else DenseLayerParams.glorot(rng, in_size, 1, "linear"))
    return layers


def _dense_stack_forward(layers, x):
    caches = []
    for layer in layers:
        x, cache = dense_step(x, layer)
        caches.append(cache)
    return x, caches


def _dense_stack_backward(layers, caches, dy, grads):
    for k in reversed(range(len(layers))):
        dy = dense_backward(dy, caches[k], layers[k], grads, f"dense{k}")
    return dy


def _as_batch(windows, input_size: int, window_len: int | None = None) -> np.ndarray:
    X = np.asarray(windows, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3:
        raise DimensionMismatch("expected windows shaped (batch, steps, features)")
    if X.shape[1] == 0:
        raise EmptyWindow("window has no time steps")
    if X.shape[2] != input_size:
        raise DimensionMismatch(f"feature size {X.shape[2]} != input size {input_size}")
    if window_len is not None and X.shape[1] != window_len:
        raise DimensionMismatch(f"window length {X.shape[1]} != {window_len}")
    return X


class Network:
    """Common plumbing; subclasses define layers, forward and backward."""

    kind = "base"
    window_len: int
    input_size: int
    dense_layers: list

    def parameters(self) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def forward(self, windows):
        raise NotImplementedError

    def backward(self, cache, d_pred, return_input_grad=False):
        raise NotImplementedError

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.parameters().items()}

    def copy(self):
        return copy.deepcopy(self)

    def load_parameters(self, values: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        if set(values) != set(params):
            raise DimensionMismatch("parameter names do not match the architecture")
        for name, arr in params.items():
            src = np.asarray(values[name], dtype=np.float64)
            if src.shape != arr.shape:
                raise DimensionMismatch(f"{name}: shape {src.shape} != {arr.shape}")
            arr[...] = src

    def n_parameters(self) -> int:
        return sum(a.size for a in self.parameters().values())

    def predict(self, windows) -> np.ndarray:
        return self.forward(windows)[0]

    def _check_cache(self, cache, d_pred):
        if cache.get("owner") is not self:
            raise CacheMismatch("cache was produced by a different network")
        d_pred = np.asarray(d_pred, dtype=np.float64).reshape(-1)
        if d_pred.size == 1 and cache["batch"] > 1:
            d_pred = np.full(cache["batch"], d_pred[0])
        if d_pred.size != cache["batch"]:
            raise CacheMismatch("upstream gradient does not match the cached batch")
        return d_pred[:, None]

    def _dense_params(self) -> dict[str, np.ndarray]:
        out = {}
        for k, layer in enumerate(self.dense_layers):
            out.update(layer.arrays(f"dense{k}"))
        return out


@dataclass(eq=False)
class LstmNetwork(Network):
    lstm_layers: list[LstmLayerParams]
    dense_layers: list[DenseLayerParams]
    input_size: int = 1
    window_len: int = DEFAULT_WINDOW

    kind = "lstm"

    def __post_init__(self):
        size = self.input_size
        for layer in self.lstm_layers:
            if layer.input_size != size:
                raise DimensionMismatch("LSTM layer sizes do not chain")
            size = layer.hidden_size
        for layer in self.dense_layers:
            if layer.input_size != size:
                raise DimensionMismatch("dense layer sizes do not chain")
            size = layer.output_size
        if size != 1:
            raise DimensionMismatch("final output size must be 1")

    @classmethod
    def create(cls, units=(512, 256), dense=(128, 64, 32), input_size=1,
               window_len=DEFAULT_WINDOW, seed=0, zero=False) -> "LstmNetwork":
        rng = SplitMix64(seed)
        layers, size = [], input_size
        for n in units:
            layers.append(LstmLayerParams.zeros(size, n) if zero
                          else LstmLayerParams.glorot(rng, size, n))
            size = n
        return cls(layers, _dense_head(rng, size, dense, zero), input_size, window_len)

    def architecture(self) -> dict:
        return {
            "kind": self.kind,
            "units": [l.hidden_size for l in self.lstm_layers],
            "dense": [l.output_size for l in self.dense_layers[:-1]],
            "input_size": self.input_size,
            "window_len": self.window_len,
        }

    def parameters(self):
        out = {}
        for k, layer in enumerate(self.lstm_layers):
            out.update(layer.arrays(f"lstm{k}"))
        out.update(self._dense_params())
        return out

    def forward(self, windows):
        X = _as_batch(windows, self.input_size)
        batch, steps, _ = X.shape
        seq = X
        layer_caches = []
        for layer in self.lstm_layers:
            h = np.zeros((batch, layer.hidden_size))
            c = np.zeros((batch, layer.hidden_size))
            outs, caches = [], []
            for t in range(steps):
                h, c, cache = lstm_cell_forward(seq[:, t], h, c, layer)
                outs.append(h)
                caches.append(cache)
            seq = np.stack(outs, axis=1)
            layer_caches.append(caches)
        y, dense_caches = _dense_stack_forward(self.dense_layers, seq[:, -1])
        cache = {"owner": self, "batch": batch, "steps": steps,
                 "lstm": layer_caches, "dense": dense_caches}
        return y[:, 0], cache

    def backward(self, cache, d_pred, return_input_grad=False):
        dy = self._check_cache(cache, d_pred)
        grads = self.zero_grads()
        d_top = _dense_stack_backward(self.dense_layers, cache["dense"], dy, grads)
        batch, steps = cache["batch"], cache["steps"]
        d_seq = np.zeros((batch, steps, self.lstm_layers[-1].hidden_size))
        d_seq[:, -1] = d_top
        for k in reversed(range(len(self.lstm_layers))):
            layer = self.lstm_layers[k]
            dh_next = np.zeros((batch, layer.hidden_size))
            dc_next = np.zeros((batch, layer.hidden_size))
            dx_seq = np.zeros((batch, steps, layer.input_size))
            for t in reversed(range(steps)):
                dx, dh_next, dc_next = lstm_cell_backward(
                    d_seq[:, t] + dh_next, dc_next, cache["lstm"][k][t], layer, grads, f"lstm{k}")
                dx_seq[:, t] = dx
            d_seq = dx_seq
        return (grads, d_seq) if return_input_grad else grads


@dataclass(eq=False)
class RnnNetwork(Network):
    rnn_layers: list[RnnLayerParams]
    dense_layers: list[DenseLayerParams]
    input_size: int = 1
    window_len: int = DEFAULT_WINDOW

    kind = "rnn"

    def __post_init__(self):
        size = self.input_size
        for layer in self.rnn_layers:
            if layer.input_size != size:
                raise DimensionMismatch("RNN layer sizes do not chain")
            size = layer.hidden_size
        for layer in self.dense_layers:
            if layer.input_size != size:
                raise DimensionMismatch("dense layer sizes do not chain")
            size = layer.output_size
        if size != 1:
            raise DimensionMismatch("final output size must be 1")

    @classmethod
    def create(cls, units=(64,), dense=(), input_size=1, window_len=DEFAULT_WINDOW,
               seed=0, zero=False) -> "RnnNetwork":
        rng = SplitMix64(seed)
        layers, size = [], input_size
        for n in units:
            layers.append(RnnLayerParams.zeros(size, n) if zero
                          else RnnLayerParams.glorot(rng, size, n))
            size = n
        return cls(layers, _dense_head(rng, size, dense, zero), input_size, window_len)

    def architecture(self) -> dict:
        return {
            "kind": self.kind,
            "units": [l.hidden_size for l in self.rnn_layers],
            "dense": [l.output_size for l in self.dense_layers[:-1]],
            "input_size": self.input_size,
            "window_len": self.window_len,
        }

    def parameters(self):
        out = {}
        for k, layer in enumerate(self.rnn_layers):
            out.update(layer.arrays(f"rnn{k}"))
        out.update(self._dense_params())
        return out

    def forward(self, windows):
        X = _as_batch(windows, self.input_size)
        batch, steps, _ = X.shape
        seq = X
        layer_caches = []
        for layer in self.rnn_layers:
            h = np.zeros((batch, layer.hidden_size))
            outs, caches = [], []
            for t in range(steps):
                h, cache = rnn_cell_step(seq[:, t], h, layer)
                outs.append(h)
                caches.append(cache)
            seq = np.stack(outs, axis=1)
            layer_caches.append(caches)
        y, dense_caches = _dense_stack_forward(self.dense_layers, seq[:, -1])
        cache = {"owner": self, "batch": batch, "steps": steps,
                 "rnn": layer_caches, "dense": dense_caches}
        return y[:, 0], cache

    def backward(self, cache, d_pred, return_input_grad=False):
        dy = self._check_cache(cache, d_pred)
        grads = self.zero_grads()
        d_top = _dense_stack_backward(self.dense_layers, cache["dense"], dy, grads)
        batch, steps = cache["batch"], cache["steps"]
        d_seq = np.zeros((batch, steps, self.rnn_layers[-1].hidden_size))
        d_seq[:, -1] = d_top
        for k in reversed(range(len(self.rnn_layers))):
            layer = self.rnn_layers[k]
            dh_next = np.zeros((batch, layer.hidden_size))
            dx_seq = np.zeros((batch, steps, layer.input_size))
            for t in reversed(range(steps)):
                dx, dh_next = rnn_cell_backward(
                    d_seq[:, t] + dh_next, cache["rnn"][k][t], layer, grads, f"rnn{k}")
                dx_seq[:, t] = dx
            d_seq = dx_seq
        return (grads, d_seq) if return_input_grad else grads


@dataclass(eq=False)
class MlpNetwork(Network):
    """Dense stack over the window flattened step-major."""

    dense_layers: list[DenseLayerParams] = field(default_factory=list)
    input_size: int = 1
    window_len: int = DEFAULT_WINDOW

    kind = "mlp"

    def __post_init__(self):
        size = self.input_size * self.window_len
        for layer in self.dense_layers:
            if layer.input_size != size:
                raise DimensionMismatch("dense layer sizes do not chain")
            size = layer.output_size
        if size != 1:
            raise DimensionMismatch("final output size must be 1")

    @classmethod
    def create(cls, hidden=(64, 32), input_size=1, window_len=DEFAULT_WINDOW,
               seed=0, zero=False) -> "MlpNetwork":
        rng = SplitMix64(seed)
        return cls(_dense_head(rng, input_size * window_len, hidden, zero), input_size, window_len)

    def architecture(self) -> dict:
        return {
            "kind": self.kind,
            "hidden": [l.output_size for l in self.dense_layers[:-1]],
            "input_size": self.input_size,
            "window_len": self.window_len,
        }

    def parameters(self):
        return self._dense_params()

    def forward(self, windows):
        X = _as_batch(windows, self.input_size, self.window_len)
        batch = X.shape[0]
        y, dense_caches = _dense_stack_forward(self.dense_layers, X.reshape(batch, -1))
        cache = {"owner": self, "batch": batch, "shape": X.shape, "dense": dense_caches}
        return y[:, 0], cache

    def backward(self, cache, d_pred, return_input_grad=False):
        dy = self._check_cache(cache, d_pred)
        grads = self.zero_grads()
        dx = _dense_stack_backward(self.dense_layers, cache["dense"], dy, grads)
        return (grads, dx.reshape(cache["shape"])) if return_input_grad else grads


def mlp_forward(window, layers: list[DenseLayerParams]) -> float:
    """Flatten ``window`` and run it through ``layers``; returns the scalar head output."""
    x = np.asarray(window, dtype=np.float64).reshape(-1)
    y, _ = _dense_stack_forward(layers, x)
    if y.shape != (1,):
        raise DimensionMismatch("final dense layer must have one output")
    return float(y[0])


def network_forward(net: Network, window):
    """Scalar prediction for a single window ``(steps, features)`` plus caches."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim == 1:
        window = window[:, None]
    if window.shape[0] == 0:
        raise EmptyWindow("window has no time steps")
    pred, cache = net.forward(window[None])
    return float(pred[0]), cache


def network_backward(net: Network, cache, d_prediction) -> dict[str, np.ndarray]:
    return net.backward(cache, d_prediction)


def build_network(kind: str, profile: str = "full", window_len: int = DEFAULT_WINDOW,
                  input_size: int = 1, seed: int = 0, **overrides) -> Network:
    """Construct a network from a named architecture profile."""
    try:
        arch = dict(PROFILES[profile][kind])
    except KeyError:
        raise ValueError(f"unknown network {kind!r} / profile {profile!r}") from None
    arch.update({k: tuple(v) for k, v in overrides.items() if v is not None})
    cls = {"lstm": LstmNetwork, "rnn": RnnNetwork, "mlp": MlpNetwork}[kind]
    return cls.create(input_size=input_size, window_len=window_len, seed=seed, **arch)


def network_from_architecture(arch: dict) -> Network:
    kind = arch["kind"]
    common = {"input_size": arch["input_size"], "window_len": arch["window_len"], "zero": True}
    if kind == "lstm":
        return LstmNetwork.create(units=arch["units"], dense=arch["dense"], **common)
    if kind == "rnn":
        return RnnNetwork.create(units=arch["units"], dense=arch["dense"], **common)
    if kind == "mlp":
        return MlpNetwork.create(hidden=arch["hidden"], **common)
    raise ValueError(f"unknown network kind {kind!r}")
