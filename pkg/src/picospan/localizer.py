"""Five-way token boundary head and threshold decoding.

A linear layer plus row-wise softmax scores each token over the relative
positions (inside, outside, start, end, both-start-and-end). Decoding does
not pick the argmax: a token counts as a start when either the "start" or
the "both-start-and-end" probability clears the threshold, and likewise
for ends, so several plausible boundaries per token survive into candidate
enumeration.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from picospan.corpus import POSITION_LABEL_NAMES, PositionLabel
from picospan.errors import ModelError
from picospan.optim import TrainConfig, batch_indices, make_optimizer

logger = logging.getLogger(__name__)

N_POSITIONS = 5
_LOG_FLOOR = 1e-12

# Sentence-level training example: (token matrix, gold labels per token).
SentenceExample = tuple[np.ndarray, Sequence[int]]


@dataclass
class LocalizerModel:
    weights: np.ndarray  # (5, dim)
    bias: np.ndarray  # (5,)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if (
            self.weights.ndim != 2
            or self.weights.shape[0] != N_POSITIONS
            or self.bias.shape != (N_POSITIONS,)
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
    def zeros(cls, dim: int) -> "LocalizerModel":
        return cls(np.zeros((N_POSITIONS, dim)), np.zeros(N_POSITIONS))

    def copy(self) -> "LocalizerModel":
        return LocalizerModel(self.weights.copy(), self.bias.copy())


@dataclass(frozen=True)
class BoundarySet:
    starts: tuple[int, ...]
    ends: tuple[int, ...]


def forward(model: LocalizerModel, token_matrix: np.ndarray) -> np.ndarray:
    """Row-wise softmax probabilities, shape (n_tokens, 5)."""
    H = np.asarray(token_matrix, dtype=np.float64)
    if H.ndim != 2 or H.shape[1] != model.dim:
        raise ModelError(
            f"token matrix has shape {H.shape}, model expects (*, {model.dim})"
        )
    logits = H @ model.weights.T + model.bias
    logits -= logits.max(axis=1, keepdims=True)
    expo = np.exp(logits)
    return expo / expo.sum(axis=1, keepdims=True)


def _one_hot(gold: Sequence[int], n: int) -> np.ndarray:
    labels = np.asarray(gold, dtype=np.intp)
    if labels.shape != (n,):
        raise ModelError(f"gold labels have length {labels.shape}, expected {n}")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= N_POSITIONS:
        raise ModelError("gold labels out of range")
    out = np.zeros((n, N_POSITIONS))
    out[np.arange(n), labels] = 1.0
    return out


def loss(probs: np.ndarray, gold: Sequence[int]) -> float:
    """Token-summed cross-entropy against the gold boundary labels."""
    P = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(gold, dtype=np.intp)
    if P.shape[0] != labels.shape[0]:
        raise ModelError(
            f"{P.shape[0]} probability rows vs {labels.shape[0]} gold labels"
        )
    picked = P[np.arange(P.shape[0]), labels]
    return float(-np.log(np.maximum(picked, _LOG_FLOOR)).sum())


def gradient(
    model: LocalizerModel, token_matrix: np.ndarray, gold: Sequence[int]
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form parameter gradients of the summed cross-entropy.

    d(logits) is probs minus one-hot gold; weights see it back-projected
    through the linear map, the bias sees its column sums.
    """
    H = np.asarray(token_matrix, dtype=np.float64)
    probs = forward(model, H)
    delta = probs - _one_hot(gold, H.shape[0])
    return delta.T @ H, delta.sum(axis=0)


def fit(
    examples: Sequence[SentenceExample],
    config: TrainConfig | None = None,
    init: LocalizerModel | None = None,
    history: list[float] | None = None,
) -> LocalizerModel:
    """Mini-batch training; deterministic given config.seed and input order.

    Batch gradients are averaged over the sentences in the batch. Per-epoch
    mean sentence loss is logged and, when ``history`` is given, appended.
    """
    if not examples:
        raise ModelError("empty training set")
    config = config or TrainConfig()
    dim = np.asarray(examples[0][0]).shape[1]
    model = init.copy() if init is not None else LocalizerModel.zeros(dim)
    if model.dim != dim:
        raise ModelError(f"init model dim {model.dim} != data dim {dim}")
    optimizer = make_optimizer(config)
    rng = np.random.default_rng(config.seed)
    for epoch in range(config.epochs):
        total = 0.0
        for batch in batch_indices(len(examples), config.batch_size, rng):
            grad_w = np.zeros_like(model.weights)
            grad_b = np.zeros_like(model.bias)
            for idx in batch:
                H, gold = examples[idx]
                probs = forward(model, H)
                total += loss(probs, gold)
                delta = probs - _one_hot(gold, probs.shape[0])
                grad_w += delta.T @ np.asarray(H, dtype=np.float64)
                grad_b += delta.sum(axis=0)
            scale = 1.0 / len(batch)
            optimizer.step([model.weights, model.bias], [grad_w * scale, grad_b * scale])
        mean_loss = total / len(examples)
        logger.info("localizer epoch %d/%d mean loss %.6f", epoch + 1, config.epochs, mean_loss)
        if history is not None:
            history.append(mean_loss)
    return model


def decode(probs: np.ndarray, threshold: float) -> BoundarySet:
    """Collect start/end token indices whose probability clears the threshold.

    The threshold lives in (0, 0.5]: below 0.2 it is dominated by the
    uniform five-way floor, and above 0.5 at most one label can clear it,
    which breaks single-token spans (their mass sits on both-start-and-end).
    """
    if not 0.0 < threshold <= 0.5:
        raise ModelError(f"threshold must be in (0, 0.5], got {threshold}")
    P = np.asarray(probs, dtype=np.float64)
    start_hit = (P[:, PositionLabel.START] >= threshold) | (
        P[:, PositionLabel.BOTH_START_AND_END] >= threshold
    )
    end_hit = (P[:, PositionLabel.END] >= threshold) | (
        P[:, PositionLabel.BOTH_START_AND_END] >= threshold
    )
    return BoundarySet(
        starts=tuple(int(i) for i in np.nonzero(start_hit)[0]),
        ends=tuple(int(i) for i in np.nonzero(end_hit)[0]),
    )


def gold_probs(labels: Sequence[int]) -> np.ndarray:
    """One-hot probability rows for a gold label sequence (oracle decoding)."""
    return _one_hot(labels, len(labels))


def save(model: LocalizerModel, path: str, config: TrainConfig | None = None) -> None:
    payload = {
        "kind": "localizer",
        "dim": model.dim,
        "categories": list(POSITION_LABEL_NAMES),
        "W": model.weights.tolist(),
        "b": model.bias.tolist(),
        "config": config.to_dict() if config else {},
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle)
        handle.write("\n")


def load(path: str) -> LocalizerModel:
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("kind") != "localizer":
        raise ModelError(f"{path}: not a localizer model file")
    if payload.get("categories") != list(POSITION_LABEL_NAMES):
        raise ModelError(f"{path}: unexpected category order")
    return LocalizerModel(np.array(payload["W"]), np.array(payload["b"]))
