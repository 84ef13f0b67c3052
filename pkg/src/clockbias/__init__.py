"""Satellite clock-bias forecasting toolkit.

Preprocessing (single difference, uniform resampling), a numpy LSTM with
hand-written backpropagation through time, RNN/MLP/ARIMA/persistence
baselines and the RMSE/MAE/MAPE comparison protocol.
"""

__version__ = "0.1.0"
