"""Exception hierarchy shared across the package."""


class PicospanError(Exception):
    """Base class for all errors raised by this package."""


class CorpusError(PicospanError):
    """Invalid corpus data: malformed input, bad indices, schema violations."""


class EmbeddingError(PicospanError):
    """Embedder misuse or unreadable embedding files."""


class ModelError(PicospanError):
    """Model shape mismatches, bad hyperparameters, unreadable model files."""


class EvaluationError(PicospanError):
    """Misaligned prediction/gold inputs or invalid test statistics inputs."""
