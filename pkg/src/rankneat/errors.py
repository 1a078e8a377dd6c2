"""Exception types shared across the pipeline."""


class RankneatError(Exception):
    """Base class for all package errors."""


class DataError(RankneatError):
    """Base class for ingestion / dataset construction errors."""


class ConstantTraceError(DataError):
    """Annotation trace has max == min; the session carries no signal."""


class EmptyResultError(DataError):
    """No window contains any annotation sample."""


class ParseError(DataError):
    """Malformed row or header in an input file."""


class DimensionMismatchError(DataError):
    """Feature vectors (or ranker and input) disagree on dimension."""


class MissingSessionError(DataError):
    """A session has features without annotations, or vice versa."""


class EmptyDatasetError(RankneatError):
    """An operation that needs at least one pair got none."""


class TrainingError(RankneatError):
    """Base class for trainer-side failures."""


class BatchTooLargeError(TrainingError):
    """Requested batch exceeds the training set size."""


class ExtinctPopulationError(TrainingError):
    """Every species was removed; evolution cannot continue."""


class TooFewParticipantsError(RankneatError):
    """Fewer distinct participants than requested folds."""


class TooFewValuesError(RankneatError):
    """A confidence interval needs at least two values."""


class GridMismatchError(RankneatError):
    """Two reports cannot be aligned on a common iteration grid."""


class ConfigError(RankneatError):
    """Invalid or unknown configuration key/value."""
