"""Two-stage overlapping span extraction.

A boundary localizer tags each token with one of five relative positions
(inside, outside, start, end, both-start-and-end), a threshold decoder
turns the per-token probabilities into start/end sets, and a multi-label
span classifier assigns categories to every start/end pairing. Overlapping
and nested spans fall out naturally because candidate spans may share
tokens.
"""

from picospan.corpus import (
    CATEGORIES,
    Corpus,
    Document,
    Entity,
    PositionLabel,
    Sentence,
    derive_position_labels,
    load_corpus,
    parse_jsonl,
    save_corpus,
    split,
)
from picospan.embedder import HASH_BACKEND, FileBackedEmbedder, HashedEmbedder
from picospan.errors import (
    CorpusError,
    EmbeddingError,
    EvaluationError,
    ModelError,
    PicospanError,
)
from picospan.optim import TrainConfig
from picospan.pipeline import Models, PipelineConfig, predict, predict_corpus, train_all

__version__ = "0.1.0"

__all__ = [
    "CATEGORIES",
    "Corpus",
    "CorpusError",
    "Document",
    "EmbeddingError",
    "Entity",
    "EvaluationError",
    "FileBackedEmbedder",
    "HASH_BACKEND",
    "HashedEmbedder",
    "ModelError",
    "Models",
    "PicospanError",
    "PipelineConfig",
    "PositionLabel",
    "Sentence",
    "TrainConfig",
    "derive_position_labels",
    "load_corpus",
    "parse_jsonl",
    "predict",
    "predict_corpus",
    "save_corpus",
    "split",
    "train_all",
    "__version__",
]
