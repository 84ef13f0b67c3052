"""Numpy neural engine: cells, stacked networks, Adam, training loop."""

from .layers import (
    DenseLayerParams,
    LstmLayerParams,
    RnnLayerParams,
    dense_forward,
    lstm_cell_forward,
    rnn_cell_forward,
    selu,
)
from .networks import (
    LstmNetwork,
    MlpNetwork,
    RnnNetwork,
    build_network,
    mlp_forward,
    network_backward,
    network_forward,
)
from .optim import AdamState, adam_update
from .training import TrainConfig, TrainHistory, predict_recursive, train

__all__ = [
    "AdamState", "DenseLayerParams", "LstmLayerParams", "LstmNetwork", "MlpNetwork",
    "RnnLayerParams", "RnnNetwork", "TrainConfig", "TrainHistory", "adam_update",
    "build_network", "dense_forward", "lstm_cell_forward", "mlp_forward", "network_backward",
    "network_forward", "predict_recursive", "rnn_cell_forward", "selu", "train",
]
