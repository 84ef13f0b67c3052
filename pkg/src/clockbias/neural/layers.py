"""Cell-level forward and backward passes: LSTM, vanilla RNN, dense.

Inputs may be a single vector ``(n,)`` or a batch ``(batch, n)``; weight
matrices are stored ``(out, in)`` so the pre-activation of a batch is
``x @ W.T + b``. Backward functions accumulate into a caller-owned gradient
dict keyed by the same names as the parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch
from ..rng import SplitMix64

SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772

GATES = ("i", "f", "o", "g")
ACTIVATIONS = ("selu", "linear", "tanh")


def sigmoid(z):
    # split by sign so exp never overflows
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def selu(z):
    z = np.asarray(z, dtype=np.float64)
    return SELU_LAMBDA * np.where(z > 0, z, SELU_ALPHA * np.expm1(np.minimum(z, 0.0)))


def selu_grad(z):
    z = np.asarray(z, dtype=np.float64)
    return SELU_LAMBDA * np.where(z > 0, 1.0, SELU_ALPHA * np.exp(np.minimum(z, 0.0)))


def activate(name: str, z):
    if name == "selu":
        return selu(z)
    if name == "tanh":
        return np.tanh(z)
    if name == "linear":
        return np.asarray(z, dtype=np.float64)
    raise ValueError(f"unknown activation {name!r}")


def activation_grad(name: str, z, y):
    if name == "selu":
        return selu_grad(z)
    if name == "tanh":
        return 1.0 - y * y
    return np.ones_like(z)


def glorot_uniform(rng: SplitMix64, rows: int, cols: int) -> np.ndarray:
    """``U(-limit, limit)`` with ``limit = sqrt(6 / (fan_in + fan_out))``; shape ``(rows, cols)``."""
    if rows <= 0 or cols <= 0:
        raise DimensionMismatch("weight dimensions must be positive")
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(rows * cols, -limit, limit).reshape(rows, cols)


def _check_input(x: np.ndarray, size: int, what: str) -> None:
    if x.shape[-1] != size:
        raise DimensionMismatch(f"{what} has size {x.shape[-1]}, expected {size}")


# -------------------------------------------------------------------- LSTM


@dataclass
class LstmLayerParams:
    """Per-gate weights; ``W[g]`` is (hidden, input), ``U[g]`` (hidden, hidden)."""

    W: dict[str, np.ndarray]
    U: dict[str, np.ndarray]
    b: dict[str, np.ndarray]

    def __post_init__(self):
        hidden, inp = self.W["i"].shape
        for g in GATES:
            if (self.W[g].shape != (hidden, inp) or self.U[g].shape != (hidden, hidden)
                    or self.b[g].shape != (hidden,)):
                raise DimensionMismatch(f"inconsistent shapes for gate {g!r}")

    @property
    def hidden_size(self) -> int:
        return self.W["i"].shape[0]

    @property
    def input_size(self) -> int:
        return self.W["i"].shape[1]

    def arrays(self, prefix: str) -> dict[str, np.ndarray]:
        out = {}
        for g in GATES:
            out[f"{prefix}.W_{g}"] = self.W[g]
            out[f"{prefix}.U_{g}"] = self.U[g]
            out[f"{prefix}.b_{g}"] = self.b[g]
        return out

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "LstmLayerParams":
        return cls(
            {g: np.zeros((hidden_size, input_size)) for g in GATES},
            {g: np.zeros((hidden_size, hidden_size)) for g in GATES},
            {g: np.zeros(hidden_size) for g in GATES},
        )

    @classmethod
    def glorot(cls, rng: SplitMix64, input_size: int, hidden_size: int) -> "LstmLayerParams":
        W = {g: glorot_uniform(rng, hidden_size, input_size) for g in GATES}
        U = {g: glorot_uniform(rng, hidden_size, hidden_size) for g in GATES}
        b = {g: np.zeros(hidden_size) for g in GATES}
        b["f"][:] = 1.0
        return cls(W, U, b)


def lstm_cell_forward(x, h_prev, c_prev, p: LstmLayerParams):
    """One LSTM step.

    i = sigm(W_i x + U_i h + b_i), f and o likewise, g = tanh(W_g x + U_g h + b_g),
    c = f * c_prev + i * g, h = o * tanh(c).
    """
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    _check_input(x, p.input_size, "x")
    _check_input(h_prev, p.hidden_size, "h_prev")
    _check_input(c_prev, p.hidden_size, "c_prev")

    z = {g: x @ p.W[g].T + h_prev @ p.U[g].T + p.b[g] for g in GATES}
    i, f, o = sigmoid(z["i"]), sigmoid(z["f"]), sigmoid(z["o"])
    g = np.tanh(z["g"])
    c = f * c_prev + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    cache = (x, h_prev, c_prev, i, f, o, g, tanh_c)
    return h, c, cache


def lstm_cell_backward(dh, dc, cache, p: LstmLayerParams, grads: dict, prefix: str):
    """Return ``(dx, dh_prev, dc_prev)``; parameter gradients go into ``grads``."""
    x, h_prev, c_prev, i, f, o, g, tanh_c = cache
    do = dh * tanh_c
    dc = dc + dh * o * (1.0 - tanh_c * tanh_c)
    dz = {
        "i": dc * g * i * (1.0 - i),
        "f": dc * c_prev * f * (1.0 - f),
        "o": do * o * (1.0 - o),
        "g": dc * i * (1.0 - g * g),
    }
    dc_prev = dc * f
    dx = 0.0
    dh_prev = 0.0
    x2, h2 = np.atleast_2d(x), np.atleast_2d(h_prev)
    for gate in GATES:
        d2 = np.atleast_2d(dz[gate])
        grads[f"{prefix}.W_{gate}"] += d2.T @ x2
        grads[f"{prefix}.U_{gate}"] += d2.T @ h2
        grads[f"{prefix}.b_{gate}"] += d2.sum(axis=0)
        dx = dx + dz[gate] @ p.W[gate]
        dh_prev = dh_prev + dz[gate] @ p.U[gate]
    return dx, dh_prev, dc_prev


# --------------------------------------------------------------------- RNN


@dataclass
class RnnLayerParams:
    W: np.ndarray
    U: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        hidden, _ = self.W.shape
        if self.U.shape != (hidden, hidden) or self.b.shape != (hidden,):
            raise DimensionMismatch("inconsistent RNN layer shapes")

    @property
    def hidden_size(self) -> int:
        return self.W.shape[0]

    @property
    def input_size(self) -> int:
        return self.W.shape[1]

    def arrays(self, prefix: str) -> dict[str, np.ndarray]:
        return {f"{prefix}.W": self.W, f"{prefix}.U": self.U, f"{prefix}.b": self.b}

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "RnnLayerParams":
        return cls(np.zeros((hidden_size, input_size)), np.zeros((hidden_size, hidden_size)),
                   np.zeros(hidden_size))

    @classmethod
    def glorot(cls, rng: SplitMix64, input_size: int, hidden_size: int) -> "RnnLayerParams":
        return cls(glorot_uniform(rng, hidden_size, input_size),
                   glorot_uniform(rng, hidden_size, hidden_size), np.zeros(hidden_size))


def rnn_cell_step(x, h_prev, p: RnnLayerParams):
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    _check_input(x, p.input_size, "x")
    _check_input(h_prev, p.hidden_size, "h_prev")
    h = np.tanh(x @ p.W.T + h_prev @ p.U.T + p.b)
    return h, (x, h_prev, h)


def rnn_cell_forward(x, h_prev, p: RnnLayerParams):
    """h = tanh(W x + U h_prev + b)."""
    return rnn_cell_step(x, h_prev, p)[0]


def rnn_cell_backward(dh, cache, p: RnnLayerParams, grads: dict, prefix: str):
    x, h_prev, h = cache
    dz = dh * (1.0 - h * h)
    d2 = np.atleast_2d(dz)
    grads[f"{prefix}.W"] += d2.T @ np.atleast_2d(x)
    grads[f"{prefix}.U"] += d2.T @ np.atleast_2d(h_prev)
    grads[f"{prefix}.b"] += d2.sum(axis=0)
    return dz @ p.W, dz @ p.U


# ------------------------------------------------------------------- dense


@dataclass
class DenseLayerParams:
    W: np.ndarray
    b: np.ndarray
    activation: str = "linear"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise DimensionMismatch("inconsistent dense layer shapes")

    @property
    def input_size(self) -> int:
        return self.W.shape[1]

    @property
    def output_size(self) -> int:
        return self.W.shape[0]

    def arrays(self, prefix: str) -> dict[str, np.ndarray]:
        return {f"{prefix}.W": self.W, f"{prefix}.b": self.b}

    @classmethod
    def zeros(cls, input_size: int, output_size: int, activation: str = "linear"):
        return cls(np.zeros((output_size, input_size)), np.zeros(output_size), activation)

    @classmethod
    def glorot(cls, rng: SplitMix64, input_size: int, output_size: int, activation: str = "linear"):
        return cls(glorot_uniform(rng, output_size, input_size), np.zeros(output_size), activation)


def dense_step(x, p: DenseLayerParams):
    x = np.asarray(x, dtype=np.float64)
    _check_input(x, p.input_size, "x")
    z = x @ p.W.T + p.b
    y = activate(p.activation, z)
    return y, (x, z, y)


def dense_forward(x, p: DenseLayerParams):
    """y = act(W x + b)."""
    return dense_step(x, p)[0]


def dense_backward(dy, cache, p: DenseLayerParams, grads: dict, prefix: str):
    x, z, y = cache
    dz = dy * activation_grad(p.activation, z, y)
    d2 = np.atleast_2d(dz)
    grads[f"{prefix}.W"] += d2.T @ np.atleast_2d(x)
    grads[f"{prefix}.b"] += d2.sum(axis=0)
    return dz @ p.W
