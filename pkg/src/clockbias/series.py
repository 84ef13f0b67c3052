"""Single difference, restoration, uniform resampling and standardisation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSeries, InvalidStep, TooShort
from .ingest import ClockBiasSeries, _frozen, to_csv


@dataclass(frozen=True, eq=False)
class DifferenceSeries:
    """First sample of a series plus its consecutive differences.

    ``step_epochs[i]`` is the epoch of the later sample of ``diffs[i]``.
    """

    base_epoch: float
    base_value: float
    step_epochs: np.ndarray
    diffs: np.ndarray
    satellite_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "step_epochs", _frozen(self.step_epochs))
        object.__setattr__(self, "diffs", _frozen(self.diffs))
        if self.step_epochs.shape != self.diffs.shape:
            raise ValueError("step_epochs and diffs must have equal length")

    def __len__(self) -> int:
        return int(self.diffs.size)

    def as_series(self) -> ClockBiasSeries:
        """The differences as an (epoch, value) series, ready for resampling."""
        return ClockBiasSeries(self.satellite_id, self.step_epochs, self.diffs)


@dataclass(frozen=True, eq=False)
class UniformSeries:
    """Values on the grid ``start_epoch + i * step``."""

    start_epoch: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if not self.step > 0:
            raise InvalidStep("step must be positive")
        if values.ndim != 1 or not np.all(np.isfinite(values)):
            raise ValueError("values must be a finite 1-D array")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def epochs(self) -> np.ndarray:
        return self.start_epoch + np.arange(self.values.size) * self.step

    @property
    def end_epoch(self) -> float:
        """Exclusive end of the covered span, one step past the last sample."""
        return self.start_epoch + self.values.size * self.step

    def to_csv(self) -> str:
        return to_csv(self.epochs, self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, UniformSeries):
            return NotImplemented
        return (self.start_epoch == other.start_epoch and self.step == other.step
                and np.array_equal(self.values, other.values))

    __hash__ = None


@dataclass(frozen=True)
class ScaleParams:
    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise DegenerateSeries("std must be positive")


def single_difference(series: ClockBiasSeries) -> DifferenceSeries:
    if len(series) < 2:
        raise TooShort("single difference needs at least two samples")
    return DifferenceSeries(
        base_epoch=float(series.epochs[0]),
        base_value=float(series.biases[0]),
        step_epochs=series.epochs[1:],
        diffs=np.diff(series.biases),
        satellite_id=series.satellite_id,
    )


def restore_from_difference(diff: DifferenceSeries) -> ClockBiasSeries:
    """Left-to-right cumulative sum starting from the base value.

    Exact whenever each subtraction in the forward difference was exact,
    e.g. consecutive samples of equal sign within a factor of two.
    """
    # np.cumsum on 1-D input is a sequential left-to-right accumulation
    values = np.cumsum(np.concatenate(([diff.base_value], diff.diffs)))
    epochs = np.concatenate(([diff.base_epoch], diff.step_epochs))
    return ClockBiasSeries(diff.satellite_id, epochs, values)


def min_epoch_interval(series: ClockBiasSeries) -> float:
    if len(series) < 2:
        raise TooShort("interval needs at least two samples")
    return float(np.min(np.diff(series.epochs)))


def resample_uniform(series: ClockBiasSeries, step: float | None = None) -> UniformSeries:
    """Snap or interpolate the series onto a grid of spacing ``step``.

    The grid runs from the first epoch to the last inclusive. A grid point
    takes the value of the nearest raw sample within ``step / 2`` (ties go to
    the earlier sample), otherwise the linear interpolation between its
    bracketing samples. ``step`` defaults to the smallest epoch interval.
    """
    if len(series) < 2:
        raise TooShort("resampling needs at least two samples")
    if step is None:
        step = min_epoch_interval(series)
    step = float(step)
    if not (step > 0 and math.isfinite(step)):
        raise InvalidStep(f"step must be positive, got {step}")

    t, x = series.epochs, series.biases
    start = float(t[0])
    count = int(math.floor((float(t[-1]) - start) / step)) + 1
    grid = start + np.arange(count) * step

    # right: first sample strictly after the grid point; left: last at or before
    right = np.searchsorted(t, grid, side="right")
    left = right - 1
    right_c = np.minimum(right, t.size - 1)
    d_left = grid - t[left]
    d_right = t[right_c] - grid
    has_right = right < t.size

    half = step / 2.0
    snap_left = d_left <= half
    snap_right = has_right & (d_right <= half)
    # nearest wins; the earlier sample wins a tie
    use_right = snap_right & (~snap_left | (d_right < d_left))
    use_left = snap_left & ~use_right

    values = np.empty(count)
    values[use_left] = x[left[use_left]]
    values[use_right] = x[right_c[use_right]]
    interp = ~(use_left | use_right)
    if np.any(interp):
        lo, hi = left[interp], right_c[interp]
        frac = (grid[interp] - t[lo]) / (t[hi] - t[lo])
        values[interp] = x[lo] + frac * (x[hi] - x[lo])
    return UniformSeries(start, step, values)


def standardize(u: UniformSeries) -> tuple[UniformSeries, ScaleParams]:
    """Return ``(v - mean) / std`` with the population standard deviation."""
    mean = float(np.mean(u.values))
    std = float(np.std(u.values))
    if not std > 0 or np.all(u.values == u.values[0]):
        raise DegenerateSeries("cannot standardise a constant series")
    params = ScaleParams(mean, std)
    return UniformSeries(u.start_epoch, u.step, (u.values - mean) / std), params


def unstandardize(u: UniformSeries, params: ScaleParams) -> UniformSeries:
    return UniformSeries(u.start_epoch, u.step, u.values * params.std + params.mean)
