"""Mini-batch MSE training with Adam and early stopping; closed-loop prediction."""

from __future__ import annotations

import logging
import math
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import DegenerateSplit, EmptyDataset, EmptyWindow, NonFiniteValue
from ..rng import SplitMix64, mix64
from ..windows import WindowedDataset
from .networks import Network
from .optim import AdamState, adam_update, clip_by_global_norm

log = logging.getLogger(__name__)


def derive_seed(seed: int, tag: str) -> int:
    """Deterministic child seed for a named purpose (``"init"``, ``"shuffle"``, ...)."""
    z = np.array([(int(seed) ^ (zlib.crc32(tag.encode()) << 32)) & (2**64 - 1)], dtype=np.uint64)
    return int(mix64(z)[0])


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    max_epochs: int = 10
    patience: int = 3
    batch_size: int = 32
    validation_fraction: float = 0.1
    seed: int = 0
    clip_norm: float | None = 5.0

    def __post_init__(self):
        if not (self.learning_rate > 0 and self.max_epochs > 0 and self.patience > 0
                and self.batch_size > 0):
            raise ValueError("learning_rate, max_epochs, patience and batch_size must be positive")
        if not 0 < self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in (0, 1)")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ValueError("clip_norm must be positive or None")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    stopped_early: bool = False
    best_epoch: int = -1

    @property
    def epochs(self) -> int:
        return len(self.train_loss)

    def to_csv(self) -> str:
        rows = ["epoch,train_loss,val_loss,best"]
        for k, (tr, va) in enumerate(zip(self.train_loss, self.val_loss)):
            rows.append(f"{k},{tr!r},{va!r},{int(k == self.best_epoch)}")
        return "\n".join(rows) + "\n"


def split_train_validation(data: WindowedDataset, fraction: float):
    """Chronological split: the last ``fraction`` of windows validate."""
    n = len(data)
    if n == 0:
        raise EmptyDataset("no training windows")
    n_train = int(n * (1.0 - fraction))
    if n_train < 1 or n - n_train < 1:
        raise DegenerateSplit(f"{n} windows cannot be split with validation fraction {fraction}")
    return data.subset(slice(0, n_train)), data.subset(slice(n_train, n))


def mse(net: Network, data: WindowedDataset) -> float:
    pred, _ = net.forward(data.windows)
    return float(np.mean((pred - data.targets) ** 2))


def _finite(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise NonFiniteValue(f"{what} is not finite")
    return value


def train(net: Network, data: WindowedDataset, cfg: TrainConfig, on_epoch_end=None):
    """Fit a copy of ``net``; returns ``(best_net, history)``.

    Batches are drawn in an order shuffled each epoch by the seeded stream.
    Training stops once validation loss fails to improve for ``patience``
    consecutive epochs, and the parameters of the best validation epoch are
    returned. ``on_epoch_end(epoch, net, history)`` is called after each
    epoch's validation pass.
    """
    train_set, val_set = split_train_validation(data, cfg.validation_fraction)
    net = net.copy()
    params = net.parameters()
    state = AdamState.for_params(params)
    rng = SplitMix64(derive_seed(cfg.seed, "shuffle"))
    history = TrainHistory()

    best_loss = math.inf
    best_params = {k: v.copy() for k, v in params.items()}
    wait = 0
    n = len(train_set)
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            X, y = train_set.windows[idx], train_set.targets[idx]
            pred, cache = net.forward(X)
            err = pred - y
            total += float(np.sum(err * err))
            grads = net.backward(cache, 2.0 * err / idx.size)
            clip_by_global_norm(grads, cfg.clip_norm)
            adam_update(params, grads, state, cfg.learning_rate)
        history.train_loss.append(_finite(total / n, "training loss"))
        val = _finite(mse(net, val_set), "validation loss")
        history.val_loss.append(val)
        log.debug("epoch %d train %.6g val %.6g", epoch, history.train_loss[-1], val)
        if on_epoch_end is not None:
            on_epoch_end(epoch, net, history)

        if val < best_loss:
            best_loss, history.best_epoch, wait = val, epoch, 0
            best_params = {k: v.copy() for k, v in params.items()}
        else:
            wait += 1
            if wait >= cfg.patience:
                history.stopped_early = True
                break
    net.load_parameters(best_params)
    return net, history


def predict_recursive(net: Network, seed_window, horizon: int) -> list[float]:
    """Closed-loop forecast: each prediction is fed back as the newest input."""
    window = np.asarray(seed_window, dtype=np.float64)
    if window.ndim == 1:
        window = window[:, None]
    if window.shape[0] == 0:
        raise EmptyWindow("seed window is empty")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if window.shape[1] != 1:
        raise ValueError("closed-loop prediction needs a single input feature")
    window = window.copy()
    out = []
    for _ in range(horizon):
        y = float(net.forward(window[None])[0][0])
        out.append(y)
        window[:-1] = window[1:]
        window[-1, 0] = y
    return out
