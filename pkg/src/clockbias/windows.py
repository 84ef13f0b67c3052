"""Supervised framing of a uniform series as (window, next value) pairs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooShort


@dataclass(frozen=True, eq=False)
class WindowedDataset:
    windows: np.ndarray  # (count, window_len, features)
    targets: np.ndarray  # (count,)
    window_len: int
    step: float = 600.0

    def __len__(self) -> int:
        return int(self.targets.size)

    def subset(self, index) -> "WindowedDataset":
        return WindowedDataset(self.windows[index], self.targets[index], self.window_len, self.step)


def make_windows(u, window_len: int) -> WindowedDataset:
    """Window ``i`` is ``values[i:i+window_len]``, target ``values[i+window_len]``."""
    values = np.asarray(u.values, dtype=np.float64)
    if window_len < 1:
        raise ValueError("window_len must be positive")
    if values.size < window_len + 1:
        raise TooShort(f"need at least {window_len + 1} values for windows of {window_len}")
    count = values.size - window_len
    idx = np.arange(count)[:, None] + np.arange(window_len)[None, :]
    return WindowedDataset(values[idx][:, :, None], values[window_len:].copy(), window_len, u.step)
