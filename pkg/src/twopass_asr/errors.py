"""Exception types shared across the toolkit."""


class TwopassAsrError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(TwopassAsrError, ValueError):
    """Tensor shapes are incompatible for the requested operation."""


class ContractError(TwopassAsrError, ValueError):
    """A documented precondition of an operation was violated."""


class ParameterError(TwopassAsrError, ValueError):
    """An argument value is outside its documented range."""


class ConfigurationError(TwopassAsrError, ValueError):
    """A model or run configuration is internally inconsistent."""


class SequenceTooShortError(TwopassAsrError, ValueError):
    """Input sequence is shorter than the architecture can compress."""


class InputTooShortError(TwopassAsrError, ValueError):
    """Audio is shorter than a single analysis window."""


class UnreachableTargetError(TwopassAsrError, ValueError):
    """Target label sequence cannot be aligned within the given frames."""


class VocabularyError(TwopassAsrError, ValueError):
    """Token id is unknown to the vocabulary."""


class CheckpointError(TwopassAsrError, ValueError):
    """Checkpoint content does not match the model it is loaded into."""


class DataFormatError(TwopassAsrError, ValueError):
    """A serialized artifact has invalid magic bytes, version, or layout."""


class UndefinedMetricError(TwopassAsrError, ValueError):
    """Metric is undefined for the given inputs (e.g. empty reference)."""


class DataError(TwopassAsrError, RuntimeError):
    """Dataset artifacts are missing, unreadable, or inconsistent."""


class TrainingDivergedError(TwopassAsrError, RuntimeError):
    """Training produced a non-finite loss."""
