"""Versioned JSON checkpoints for every forecaster family.

Floats are written with Python's shortest round-trip repr, so a save/load
cycle reproduces every parameter bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__
from .arima import ArimaModel
from .errors import CheckpointError
from .forecasters import ArimaForecaster, Forecaster, NeuralForecaster, PersistenceForecaster
from .neural.networks import network_from_architecture
from .neural.training import TrainConfig, TrainHistory
from .series import ScaleParams

FORMAT = "clockbias-checkpoint"
VERSION = 1


def _array(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": [float(v) for v in a.reshape(-1)]}


def _from_array(d: dict) -> np.ndarray:
    return np.asarray(d["data"], dtype=np.float64).reshape(d["shape"])


def forecaster_to_dict(f: Forecaster, meta: dict | None = None) -> dict:
    doc = {"format": FORMAT, "version": VERSION, "toolkit_version": __version__,
           "meta": meta or {}}
    if isinstance(f, NeuralForecaster):
        doc["model"] = f.kind
        doc["profile"] = f.profile
        doc["window_len"] = f.window_len
        doc["standardize"] = f.standardize
        doc["train_config"] = f.config.to_dict()
        doc["constant"] = f.constant
        doc["scale"] = None if f.scale is None else {"mean": f.scale.mean, "std": f.scale.std}
        doc["seed_window"] = None if f.seed_window is None else [float(v) for v in f.seed_window]
        if f.net is not None:
            doc["architecture"] = f.net.architecture()
            doc["parameters"] = {k: _array(v) for k, v in f.net.parameters().items()}
        if f.history is not None:
            doc["history"] = {"train_loss": f.history.train_loss, "val_loss": f.history.val_loss,
                              "stopped_early": f.history.stopped_early,
                              "best_epoch": f.history.best_epoch}
    elif isinstance(f, ArimaForecaster):
        doc["model"] = "arima"
        doc["arima"] = f.model.to_dict()
    elif isinstance(f, PersistenceForecaster):
        doc["model"] = "persistence"
        doc["last"] = f.last
    else:
        raise CheckpointError(f"cannot serialise {type(f).__name__}")
    return doc


def forecaster_from_dict(doc: dict) -> Forecaster:
    if doc.get("format") != FORMAT:
        raise CheckpointError("not a clockbias checkpoint")
    if doc.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')!r}")
    kind = doc.get("model")
    try:
        if kind in ("lstm", "rnn", "mlp"):
            f = NeuralForecaster(kind, doc["profile"], doc["window_len"],
                                 TrainConfig(**doc["train_config"]), doc["standardize"])
            f.constant = doc.get("constant")
            if doc.get("scale"):
                f.scale = ScaleParams(**doc["scale"])
            if doc.get("seed_window") is not None:
                f.seed_window = np.asarray(doc["seed_window"], dtype=np.float64)
            if "architecture" in doc:
                f.net = network_from_architecture(doc["architecture"])
                f.net.load_parameters({k: _from_array(v) for k, v in doc["parameters"].items()})
            if "history" in doc:
                f.history = TrainHistory(**doc["history"])
            return f
        if kind == "arima":
            model = ArimaModel.from_dict(doc["arima"])
            return ArimaForecaster(model.order, model)
        if kind == "persistence":
            f = PersistenceForecaster()
            f.last = doc["last"]
            return f
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc
    raise CheckpointError(f"unknown model kind {kind!r}")


def dumps(f: Forecaster, meta: dict | None = None) -> str:
    return json.dumps(forecaster_to_dict(f, meta), sort_keys=True, allow_nan=False) + "\n"


def loads(text: str) -> tuple[Forecaster, dict]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint is not valid JSON: {exc}") from exc
    return forecaster_from_dict(doc), doc.get("meta", {})


def save(path, f: Forecaster, meta: dict | None = None) -> None:
    Path(path).write_text(dumps(f, meta))


def load(path) -> tuple[Forecaster, dict]:
    return loads(Path(path).read_text())


def summary(doc: dict) -> str:
    """Human-readable architecture summary of a checkpoint document."""
    lines = [f"model: {doc.get('model')}", f"format version: {doc.get('version')}"]
    if "architecture" in doc:
        for k, v in doc["architecture"].items():
            lines.append(f"{k}: {v}")
        n = sum(int(np.prod(p["shape"])) for p in doc["parameters"].values())
        lines.append(f"parameters: {n}")
        for name, p in doc["parameters"].items():
            lines.append(f"  {name}: {tuple(p['shape'])}")
    if "train_config" in doc:
        lines.append(f"train config: {doc['train_config']}")
    if doc.get("history"):
        h = doc["history"]
        lines.append(f"epochs run: {len(h['train_loss'])}, best epoch: {h['best_epoch']}, "
                     f"stopped early: {h['stopped_early']}")
    if doc.get("scale"):
        lines.append(f"scale: mean={doc['scale']['mean']!r} std={doc['scale']['std']!r}")
    if "arima" in doc:
        a = doc["arima"]
        lines.append(f"order: {tuple(a['order'])}")
        lines.append(f"phi: {a['phi']}  theta: {a['theta']}")
        lines.append(f"intercept: {a['intercept']!r}  sigma2: {a['sigma2']!r}")
    for k, v in sorted(doc.get("meta", {}).items()):
        lines.append(f"{k}: {v}")
    return "\n".join(lines)
