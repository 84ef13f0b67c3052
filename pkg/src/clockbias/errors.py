"""Exception hierarchy shared by every stage of the toolkit."""


class ClockBiasError(Exception):
    """Base class for all structured toolkit errors."""

    stage = "toolkit"


class LineError(ClockBiasError):
    """An error tied to a 1-based line number of an input document."""

    def __init__(self, line: int, message: str = ""):
        self.line = line
        super().__init__(f"line {line}: {message}" if message else f"line {line}")


# ingest
class IngestError(ClockBiasError):
    stage = "ingest"


class EmptyInput(IngestError):
    pass


class MalformedLine(LineError, IngestError):
    pass


class NonMonotonicEpoch(LineError, IngestError):
    pass


class MissingHeaderTerminator(IngestError):
    pass


class MalformedRecord(LineError, IngestError):
    pass


class SatelliteNotFound(IngestError):
    pass


class InvalidConfig(IngestError, ValueError):
    pass


# series
class SeriesError(ClockBiasError):
    stage = "series"


class TooShort(SeriesError, ValueError):
    pass


class InvalidStep(SeriesError, ValueError):
    pass


class DegenerateSeries(SeriesError, ValueError):
    pass


# neural
class NeuralError(ClockBiasError):
    stage = "neural"


class DimensionMismatch(NeuralError, ValueError):
    pass


class EmptyWindow(NeuralError, ValueError):
    pass


class CacheMismatch(NeuralError, ValueError):
    pass


class EmptyDataset(NeuralError, ValueError):
    pass


class DegenerateSplit(NeuralError, ValueError):
    pass


class NonFiniteValue(NeuralError, FloatingPointError):
    pass


# arima
class ArimaError(ClockBiasError):
    stage = "arima"


class NonStationaryEstimate(ArimaError):
    pass


# eval
class EvalError(ClockBiasError):
    stage = "eval"


class InsufficientSpan(EvalError, ValueError):
    pass


class LengthMismatch(EvalError, ValueError):
    pass


class AllSkipped(EvalError, ValueError):
    pass


class CheckpointError(ClockBiasError):
    stage = "checkpoint"
