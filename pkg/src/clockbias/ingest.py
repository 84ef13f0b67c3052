"""Clock-bias ingestion: CSV, RINEX 3.x clock files, synthetic generator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, NamedTuple

import numpy as np

from .errors import (
    EmptyInput,
    InvalidConfig,
    MalformedLine,
    MalformedRecord,
    MissingHeaderTerminator,
    NonMonotonicEpoch,
    SatelliteNotFound,
)
from .rng import SplitMix64

CSV_HEADER = "epoch_s,bias_s"
DAY = 86400.0


class ClockRecord(NamedTuple):
    epoch: float
    bias: float


def _frozen(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ClockBiasSeries:
    """Ordered (epoch, bias) samples of one clock, in seconds.

    Epochs must be strictly increasing and biases finite; the arrays are
    stored read-only.
    """

    satellite_id: str
    epochs: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        epochs = _frozen(self.epochs)
        biases = _frozen(self.biases)
        if epochs.ndim != 1 or epochs.shape != biases.shape:
            raise ValueError("epochs and biases must be 1-D arrays of equal length")
        if not np.all(np.isfinite(biases)) or not np.all(np.isfinite(epochs)):
            raise ValueError("epochs and biases must be finite")
        if epochs.size > 1 and np.any(np.diff(epochs) <= 0):
            raise ValueError("epochs must be strictly increasing")
        object.__setattr__(self, "epochs", epochs)
        object.__setattr__(self, "biases", biases)

    @classmethod
    def from_records(cls, satellite_id: str, records: Iterable[ClockRecord]):
        records = list(records)
        return cls(satellite_id, [r[0] for r in records], [r[1] for r in records])

    @property
    def records(self) -> list[ClockRecord]:
        return [ClockRecord(float(e), float(b)) for e, b in zip(self.epochs, self.biases)]

    def __len__(self) -> int:
        return int(self.epochs.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClockBiasSeries):
            return NotImplemented
        return (
            self.satellite_id == other.satellite_id
            and np.array_equal(self.epochs, other.epochs)
            and np.array_equal(self.biases, other.biases)
        )

    __hash__ = None


# --------------------------------------------------------------------- CSV


def format_epoch(epoch: float) -> str:
    epoch = float(epoch)
    if epoch.is_integer() and abs(epoch) < 2**53:
        return str(int(epoch))
    return repr(epoch)


def format_value(value: float) -> str:
    return repr(float(value))


def to_csv(epochs: Iterable[float], values: Iterable[float]) -> str:
    lines = [CSV_HEADER]
    lines.extend(f"{format_epoch(e)},{format_value(v)}" for e, v in zip(epochs, values))
    return "\n".join(lines) + "\n"


def series_to_csv(series: ClockBiasSeries) -> str:
    return to_csv(series.epochs, series.biases)


def parse_clock_csv(text: str, satellite_id: str = "") -> ClockBiasSeries:
    """Parse an ``epoch_s,bias_s`` document.

    Line numbers in errors are 1-based and count the header as line 1.
    Blank lines are ignored.
    """
    lines = text.split("\n")
    numbered = [(i + 1, ln.strip()) for i, ln in enumerate(lines) if ln.strip()]
    if not numbered:
        raise EmptyInput("document is empty")
    header_no, header = numbered[0]
    if header.replace(" ", "") != CSV_HEADER:
        raise MalformedLine(header_no, f"expected header {CSV_HEADER!r}")
    epochs: list[float] = []
    biases: list[float] = []
    for lineno, line in numbered[1:]:
        parts = line.split(",")
        if len(parts) != 2:
            raise MalformedLine(lineno, "expected two comma-separated fields")
        try:
            epoch = float(parts[0])
            bias = float(parts[1])
        except ValueError:
            raise MalformedLine(lineno, "non-numeric field") from None
        if not (math.isfinite(epoch) and math.isfinite(bias)):
            raise MalformedLine(lineno, "non-finite value")
        if epochs and epoch <= epochs[-1]:
            raise NonMonotonicEpoch(lineno, f"epoch {parts[0].strip()} does not increase")
        epochs.append(epoch)
        biases.append(bias)
    if not epochs:
        raise EmptyInput("document has no records")
    return ClockBiasSeries(satellite_id, epochs, biases)


# ------------------------------------------------------------------- RINEX


def _rinex_float(token: str) -> float:
    return float(token.replace("D", "E").replace("d", "e"))


def parse_rinex_clk(text: str, satellite_id: str) -> ClockBiasSeries:
    """Extract the ``AS`` bias records of one satellite from a RINEX 3.x clock file.

    Data lines are split on whitespace, so the 4-character (3.00-3.02) and
    9-character (3.04) name fields are both accepted. Only the first value
    (the bias) is consumed. Epochs are seconds since the first data record
    of the file, leap seconds ignored.
    """
    lines = text.splitlines()
    header_end = next((i for i, ln in enumerate(lines) if "END OF HEADER" in ln), None)
    if header_end is None:
        raise MissingHeaderTerminator("no 'END OF HEADER' line")

    reference: datetime | None = None
    epochs: list[float] = []
    biases: list[float] = []
    for i in range(header_end + 1, len(lines)):
        lineno = i + 1
        line = lines[i]
        if not line.strip():
            continue
        tokens = line.split()
        if len(tokens) < 10:
            raise MalformedRecord(lineno, "too few fields for a clock data record")
        try:
            year, month, day, hour, minute = (int(t) for t in tokens[2:7])
            seconds = float(tokens[7])
            count = int(tokens[8])
            stamp = datetime(year, month, day, hour, minute)
        except ValueError:
            raise MalformedRecord(lineno, "bad epoch fields") from None
        if count < 1:
            raise MalformedRecord(lineno, "value count must be at least 1")
        if reference is None:
            reference = stamp
        if tokens[0] != "AS" or tokens[1] != satellite_id:
            continue
        try:
            bias = _rinex_float(tokens[9])
        except ValueError:
            raise MalformedRecord(lineno, "bad clock bias value") from None
        if not math.isfinite(bias):
            raise MalformedRecord(lineno, "non-finite clock bias")
        epoch = (stamp - reference).total_seconds() + seconds
        if epochs and epoch <= epochs[-1]:
            raise NonMonotonicEpoch(lineno, "epochs of the satellite do not increase")
        epochs.append(epoch)
        biases.append(bias)
    if not epochs:
        raise SatelliteNotFound(f"no AS records for satellite {satellite_id!r}")
    return ClockBiasSeries(satellite_id, epochs, biases)


# --------------------------------------------------------------- synthetic


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic clock model (all quantities in seconds)."""

    a0: float = 0.0
    a1: float = 0.0
    a2: float = 0.0
    white_sigma: float = 0.0
    rw_sigma: float = 0.0
    periodic_amp: float = 0.0
    periodic_period: float = 21600.0
    jumps: tuple[tuple[float, float], ...] = field(default_factory=tuple)
    step: float = 600.0
    duration: float = 31 * DAY + 600.0
    seed: int = 0
    satellite_id: str = "SYN"

    def __post_init__(self):
        object.__setattr__(self, "jumps", tuple((float(e), float(d)) for e, d in self.jumps))

    def validate(self) -> None:
        if not self.step > 0:
            raise InvalidConfig("step must be positive")
        if not self.duration >= 2 * self.step:
            raise InvalidConfig("duration must cover at least two steps")
        for name in ("white_sigma", "rw_sigma", "periodic_amp"):
            if not getattr(self, name) >= 0:
                raise InvalidConfig(f"{name} must be non-negative")
        if self.periodic_amp > 0 and not self.periodic_period > 0:
            raise InvalidConfig("periodic_period must be positive")
        values = [self.a0, self.a1, self.a2, self.white_sigma, self.rw_sigma,
                  self.periodic_amp, self.periodic_period, self.step, self.duration]
        values += [v for jump in self.jumps for v in jump]
        if not all(math.isfinite(v) for v in values):
            raise InvalidConfig("parameters must be finite")

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["jumps"] = [list(j) for j in self.jumps]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfig(f"unknown synth keys: {sorted(unknown)}")
        d = dict(d)
        d["jumps"] = tuple(tuple(j) for j in d.get("jumps", ()))
        return cls(**d)


# Drift, a 6-hour periodic term, white noise and one phase jump on day 1;
# 31 days plus one step so the difference sequence covers 31 full days.
PRESETS: dict[str, SynthConfig] = {
    "default": SynthConfig(
        a0=1.0e-4,
        a1=2.0e-12,
        periodic_amp=2.0e-9,
        periodic_period=6 * 3600.0,
        white_sigma=1.0e-11,
        rw_sigma=1.0e-12,
        jumps=((1 * DAY + 7 * 600.0, 5.0e-10),),
        satellite_id="E08",
    ),
}
PRESETS["paper-like"] = PRESETS["default"]


def preset(name: str, seed: int | None = None) -> SynthConfig:
    try:
        config = PRESETS[name]
    except KeyError:
        raise InvalidConfig(f"unknown synth preset {name!r}; choose from {sorted(PRESETS)}") from None
    if seed is not None:
        config = SynthConfig(**{**config.__dict__, "seed": int(seed)})
    return config


def generate_synthetic_clock(config: SynthConfig) -> ClockBiasSeries:
    """Sample the clock model on ``floor(duration / step)`` epochs from 0.

    Noise draws come from one SplitMix64 stream seeded with ``config.seed``:
    first one white-noise normal per sample, then one random-walk step per
    sample after the first (the walk starts at 0).
    """
    config.validate()
    n = int(math.floor(config.duration / config.step))
    t = np.arange(n, dtype=np.float64) * config.step

    bias = config.a0 + config.a1 * t + 0.5 * config.a2 * t * t
    rng = SplitMix64(config.seed)
    white = rng.normal(n, config.white_sigma)
    walk = np.concatenate(([0.0], np.cumsum(rng.normal(n - 1, config.rw_sigma))))
    bias = bias + walk + white
    if config.periodic_amp:
        bias = bias + config.periodic_amp * np.sin(2.0 * np.pi * t / config.periodic_period)
    for epoch, delta in config.jumps:
        bias = bias + np.where(t >= epoch, delta, 0.0)
    return ClockBiasSeries(config.satellite_id, t, bias)
