"""Multi-label span classification head with composite-span rejection.

One independent sigmoid per category scores each span vector, so a span
can carry several categories at once; a span that clears the decision
threshold in no category is treated as a non-entity and dropped. The
objective is full binary cross-entropy over the three categories: the
negative terms are what teach the head to reject composite spans.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from picospan.corpus import CATEGORIES, Sentence
from picospan.errors import ModelError
from picospan.optim import TrainConfig, batch_indices, make_optimizer

logger = logging.getLogger(__name__)

N_CATEGORIES = len(CATEGORIES)
_LOG_FLOOR = 1e-12

# One training example: (span vector, 0/1 target per category).
SpanExample = tuple[np.ndarray, np.ndarray]


@dataclass
class ClassifierModel:
    weights: np.ndarray  # (3, span_dim)
    bias: np.ndarray  # (3,)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if (
            self.weights.ndim != 2
            or self.weights.shape[0] != N_CATEGORIES
            or self.bias.shape != (N_CATEGORIES,)
        ):
            raise ModelError(
                f"bad parameter shapes {self.weights.shape} / {self.bias.shape}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ModelError("non-finite parameters")

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def zeros(cls, dim: int) -> "ClassifierModel":
        return cls(np.zeros((N_CATEGORIES, dim)), np.zeros(N_CATEGORIES))

    def copy(self) -> "ClassifierModel":
        return ClassifierModel(self.weights.copy(), self.bias.copy())


@dataclass(frozen=True)
class LabeledSpan:
    """A span candidate that survived classification.

    ``scores`` holds the per-category sigmoid outputs in (P, I, O) order;
    ``categories`` is the subset whose score cleared the decision threshold
    and is never empty on an emitted span.
    """

    start: int
    end: int
    scores: tuple[float, float, float]
    categories: tuple[str, ...]

    def score_of(self, category: str) -> float:
        if category not in CATEGORIES:
            raise ModelError(f"unknown category {category!r}")
        return self.scores[CATEGORIES.index(category)]


def _sigmoid(logits: np.ndarray) -> np.ndarray:
    out = np.empty_like(logits)
    pos = logits >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-logits[pos]))
    expo = np.exp(logits[~pos])
    out[~pos] = expo / (1.0 + expo)
    return out


def forward(model: ClassifierModel, vector: np.ndarray) -> np.ndarray:
    """Independent per-category probabilities for one span vector."""
    v = np.asarray(vector, dtype=np.float64)
    if v.shape != (model.dim,):
        raise ModelError(f"span vector has shape {v.shape}, model expects ({model.dim},)")
    return _sigmoid(model.weights @ v + model.bias)


def loss(scores: np.ndarray, gold: Sequence[float]) -> float:
    """Full binary cross-entropy summed over the categories.

    Targets are 0/1, so the two BCE terms collapse to -log of the
    probability assigned to the correct side; a perfect 0/1 prediction
    scores exactly zero.
    """
    p = np.asarray(scores, dtype=np.float64)
    y = np.asarray(gold, dtype=np.float64)
    if p.shape != y.shape:
        raise ModelError(f"scores shape {p.shape} vs gold shape {y.shape}")
    correct_side = np.where(y >= 0.5, p, 1.0 - p)
    return float(-np.log(np.maximum(correct_side, _LOG_FLOOR)).sum())


def gradient(
    model: ClassifierModel, vector: np.ndarray, gold: Sequence[float]
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form gradients: d(logit) is scores minus gold."""
    v = np.asarray(vector, dtype=np.float64)
    delta = forward(model, v) - np.asarray(gold, dtype=np.float64)
    return np.outer(delta, v), delta


def fit(
    examples: Sequence[SpanExample],
    config: TrainConfig | None = None,
    init: ClassifierModel | None = None,
    history: list[float] | None = None,
) -> ClassifierModel:
    """Mini-batch training over span examples; deterministic under the seed."""
    if not examples:
        raise ModelError("empty training set")
    config = config or TrainConfig()
    vectors = np.asarray([np.asarray(v, dtype=np.float64) for v, _ in examples])
    targets = np.asarray([np.asarray(y, dtype=np.float64) for _, y in examples])
    if targets.shape != (len(examples), N_CATEGORIES):
        raise ModelError(f"targets must be (*, {N_CATEGORIES}), got {targets.shape}")
    model = init.copy() if init is not None else ClassifierModel.zeros(vectors.shape[1])
    if model.dim != vectors.shape[1]:
        raise ModelError(f"init model dim {model.dim} != data dim {vectors.shape[1]}")
    optimizer = make_optimizer(config)
    rng = np.random.default_rng(config.seed)
    for epoch in range(config.epochs):
        total = 0.0
        for batch in batch_indices(len(examples), config.batch_size, rng):
            V = vectors[batch]
            Y = targets[batch]
            P = _sigmoid(V @ model.weights.T + model.bias)
            correct_side = np.where(Y >= 0.5, P, 1.0 - P)
            total += float(-np.log(np.maximum(correct_side, _LOG_FLOOR)).sum())
            delta = P - Y
            scale = 1.0 / len(batch)
            optimizer.step(
                [model.weights, model.bias],
                [delta.T @ V * scale, delta.sum(axis=0) * scale],
            )
        mean_loss = total / len(examples)
        logger.info("classifier epoch %d/%d mean loss %.6f", epoch + 1, config.epochs, mean_loss)
        if history is not None:
            history.append(mean_loss)
    return model


def classify(
    model: ClassifierModel,
    candidates: Iterable[tuple[int, int]],
    embedder,
    sentence: Sentence,
    tau: float = 0.5,
) -> list[LabeledSpan]:
    """Score candidates and keep those with at least one category >= tau.

    Candidates may be (start, end) pairs or objects with start/end fields.
    Spans that clear the threshold in no category are dropped silently:
    that is the intended rejection path for composite and other non-entity
    spans.
    """
    token_matrix = embedder.encode_tokens(sentence)
    return classify_matrix(model, candidates, token_matrix, tau)


def classify_matrix(
    model: ClassifierModel,
    candidates: Iterable[tuple[int, int]],
    token_matrix: np.ndarray,
    tau: float = 0.5,
) -> list[LabeledSpan]:
    """Same as classify but over a precomputed token matrix."""
    from picospan.embedder import span_vector

    if not 0.0 < tau < 1.0:
        raise ModelError(f"decision threshold must be in (0, 1), got {tau}")
    out = []
    for cand in candidates:
        start, end = (cand.start, cand.end) if hasattr(cand, "start") else cand
        scores = forward(model, span_vector(token_matrix, start, end))
        kept = tuple(c for c, s in zip(CATEGORIES, scores) if s >= tau)
        if kept:
            out.append(
                LabeledSpan(start, end, tuple(float(s) for s in scores), kept)
            )
    return out


def save(model: ClassifierModel, path: str, config: TrainConfig | None = None) -> None:
    payload = {
        "kind": "spanclass",
        "dim": model.dim,
        "categories": list(CATEGORIES),
        "W": model.weights.tolist(),
        "b": model.bias.tolist(),
        "config": config.to_dict() if config else {},
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle)
        handle.write("\n")


def load(path: str) -> ClassifierModel:
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("kind") != "spanclass":
        raise ModelError(f"{path}: not a span classifier model file")
    if payload.get("categories") != list(CATEGORIES):
        raise ModelError(f"{path}: unexpected category order")
    return ClassifierModel(np.array(payload["W"]), np.array(payload["b"]))
