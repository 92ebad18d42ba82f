"""Shared exception types.

The CLI maps these onto exit codes: bad arguments / configuration -> 2,
data errors -> 3, numeric failures during training -> 4.
"""


class DialsumError(Exception):
    """Base class for package-specific errors."""


class DataError(DialsumError):
    """A corpus, annotation file, or checkpoint is malformed or inconsistent."""


class EmptyCorpusError(DataError):
    """A corpus file parsed to zero dialogues."""


class TaggingError(DataError):
    """A tagger produced output that violates its contract."""


class CheckpointError(DataError):
    """A checkpoint file is unreadable or does not match the expected config."""


class TrainingDivergedError(DialsumError):
    """Loss became NaN or infinite; message names the offending step."""


class DegenerateDataError(DataError):
    """Input data carries no signal for the requested analysis (e.g. zero variance)."""
