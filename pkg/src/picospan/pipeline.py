"""End-to-end orchestration: candidate enumeration, two-stage prediction,
training drivers, and the threshold sweep.

Prediction runs one sentence at a time: encode tokens, score boundary
probabilities, decode starts/ends at the boundary threshold, pair them
into candidates, then classify each candidate at the decision threshold.
The two heads train separately (boundary labels on one side, gold spans
plus composite negatives on the other); there is no joint objective.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass, field, replace
from typing import IO, Iterable

from picospan import augment, localizer, spanclass
from picospan.corpus import Corpus, Sentence, derive_position_labels
from picospan.embedder import FileBackedEmbedder, HashedEmbedder
from picospan.errors import ModelError, PicospanError
from picospan.localizer import BoundarySet, LocalizerModel
from picospan.optim import TrainConfig
from picospan.spanclass import ClassifierModel, LabeledSpan

logger = logging.getLogger(__name__)

LOCALIZER_FILE = "localizer.json"
CLASSIFIER_FILE = "spanclass.json"
EMBEDDER_FILE = "embedder.json"


@dataclass(frozen=True)
class SpanCandidate:
    uid: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise PicospanError(f"candidate with start {self.start} > end {self.end}")


@dataclass
class PipelineConfig:
    threshold: float = 0.25  # boundary threshold, (0, 0.5]
    tau: float = 0.5  # per-category decision threshold, (0, 1)
    seed: int = 0
    strict_spans: bool = False  # require start < end when pairing boundaries
    augmentation: bool = True
    embedder: dict = field(
        default_factory=lambda: {"kind": "hashed", "dim": 256, "seed": 0, "context": True}
    )
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold <= 0.5:
            raise ModelError(f"boundary threshold must be in (0, 0.5], got {self.threshold}")
        if not 0.0 < self.tau < 1.0:
            raise ModelError(f"decision threshold must be in (0, 1), got {self.tau}")

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "tau": self.tau,
            "seed": self.seed,
            "strict_spans": self.strict_spans,
            "augmentation": self.augmentation,
            "embedder": dict(self.embedder),
            "train": self.train.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        data = dict(data)
        if "train" in data:
            data["train"] = TrainConfig.from_dict(data["train"])
        known = {f: data[f] for f in cls.__dataclass_fields__ if f in data}
        return cls(**known)


@dataclass
class Models:
    embedder: object  # anything with dim / encode_tokens
    localizer: LocalizerModel
    classifier: ClassifierModel


def enumerate_candidates(
    bounds: BoundarySet, uid: str = "", strict: bool = False
) -> list[SpanCandidate]:
    """Pair every start with every end at or after it, ordered by (start, end).

    No length cap is applied: spans legitimately stretch over whole
    sentences. ``strict`` drops single-token pairs (start == end), which
    also suppresses every single-word entity; it exists only to mimic a
    strictly-increasing pairing rule.
    """
    out = []
    for start in bounds.starts:
        for end in bounds.ends:
            if start < end or (start == end and not strict):
                out.append(SpanCandidate(uid, start, end))
    out.sort(key=lambda c: (c.start, c.end))
    return out


def build_embedder(config: dict, embeddings_path: str | None = None):
    kind = config.get("kind", "hashed")
    if kind == "hashed":
        return HashedEmbedder(
            dim=int(config.get("dim", 256)),
            seed=int(config.get("seed", 0)),
            context=bool(config.get("context", True)),
        )
    if kind == "pcxe":
        path = embeddings_path or config.get("path")
        if not path:
            raise ModelError("file-backed embedder needs an embeddings path")
        embedder = FileBackedEmbedder(path)
        expected = config.get("dim")
        if expected is not None and embedder.dim != int(expected):
            raise ModelError(
                f"embedding file dim {embedder.dim} != configured dim {expected}"
            )
        return embedder
    raise ModelError(f"unknown embedder kind {kind!r}")


def predict(sentence: Sentence, models: Models, config: PipelineConfig) -> list[LabeledSpan]:
    """Two-stage prediction for one sentence, sorted by (start, end)."""
    token_matrix = models.embedder.encode_tokens(sentence)
    probs = localizer.forward(models.localizer, token_matrix)
    bounds = localizer.decode(probs, config.threshold)
    candidates = enumerate_candidates(bounds, sentence.uid, config.strict_spans)
    labeled = spanclass.classify_matrix(
        models.classifier, candidates, token_matrix, config.tau
    )
    labeled.sort(key=lambda s: (s.start, s.end, s.categories))
    return labeled


def predict_corpus(
    corpus: Corpus, models: Models, config: PipelineConfig
) -> dict[str, list[LabeledSpan]]:
    return {s.uid: predict(s, models, config) for s in corpus.sentences()}


def count_candidates(corpus: Corpus, models: Models, config: PipelineConfig) -> int:
    """Total candidate spans over the corpus at the configured threshold."""
    total = 0
    for sentence in corpus.sentences():
        probs = localizer.forward(
            models.localizer, models.embedder.encode_tokens(sentence)
        )
        bounds = localizer.decode(probs, config.threshold)
        total += len(enumerate_candidates(bounds, sentence.uid, config.strict_spans))
    return total


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def train_all(
    corpus: Corpus,
    config: PipelineConfig,
    embedder=None,
    init: Models | None = None,
) -> Models:
    """Train both heads separately on one corpus.

    The localizer fits the derived per-token boundary labels; the
    classifier fits gold spans plus (unless disabled) composite negatives.
    Pass ``init`` to continue training from existing models.
    """
    if corpus.n_sentences() == 0:
        raise ModelError("empty corpus")
    embedder = embedder or build_embedder(config.embedder)
    sentences = [s for s in corpus.sentences() if len(s.tokens) > 0]

    loc_examples = [
        (embedder.encode_tokens(s), [int(l) for l in derive_position_labels(s)])
        for s in sentences
    ]
    loc_history: list[float] = []
    loc_model = localizer.fit(
        loc_examples,
        config.train,
        init=init.localizer if init else None,
        history=loc_history,
    )
    logger.info("localizer final mean loss %.6f", loc_history[-1] if loc_history else float("nan"))

    cls_examples = augment.build_training_set(
        corpus, embedder, enable_augmentation=config.augmentation
    )
    if not cls_examples:
        raise ModelError("no labeled spans in corpus; cannot train the classifier")
    cls_history: list[float] = []
    cls_model = spanclass.fit(
        cls_examples,
        config.train,
        init=init.classifier if init else None,
        history=cls_history,
    )
    logger.info("classifier final mean loss %.6f", cls_history[-1] if cls_history else float("nan"))
    return Models(embedder, loc_model, cls_model)


def save_models(directory: str, models: Models, config: PipelineConfig) -> None:
    os.makedirs(directory, exist_ok=True)
    localizer.save(models.localizer, os.path.join(directory, LOCALIZER_FILE), config.train)
    spanclass.save(models.classifier, os.path.join(directory, CLASSIFIER_FILE), config.train)
    with open(os.path.join(directory, EMBEDDER_FILE), "w", encoding="utf-8") as handle:
        json.dump(models.embedder.config(), handle)
        handle.write("\n")


def load_models(directory: str, embeddings_path: str | None = None) -> Models:
    with open(os.path.join(directory, EMBEDDER_FILE), "r", encoding="utf-8") as handle:
        embedder_config = json.load(handle)
    embedder = build_embedder(embedder_config, embeddings_path)
    loc_model = localizer.load(os.path.join(directory, LOCALIZER_FILE))
    cls_model = spanclass.load(os.path.join(directory, CLASSIFIER_FILE))
    if loc_model.dim != embedder.dim or cls_model.dim != 3 * embedder.dim:
        raise ModelError(
            f"model dims ({loc_model.dim}, {cls_model.dim}) do not match "
            f"embedder dim {embedder.dim}"
        )
    return Models(embedder, loc_model, cls_model)


# ---------------------------------------------------------------------------
# Threshold sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    threshold: float
    precision: float
    recall: float
    f1: float
    n_candidates: int


def sweep_threshold(
    corpus: Corpus,
    models: Models,
    thresholds: Iterable[float],
    config: PipelineConfig | None = None,
) -> list[SweepPoint]:
    """Full predict+evaluate per threshold; micro scores against the corpus gold."""
    from picospan.evaluator import evaluate

    config = config or PipelineConfig()
    points = []
    for threshold in thresholds:
        run_config = replace(config, threshold=threshold)
        predictions = predict_corpus(corpus, models, run_config)
        report = evaluate(predictions, corpus)
        points.append(
            SweepPoint(
                threshold,
                report.micro.precision,
                report.micro.recall,
                report.micro.f1,
                count_candidates(corpus, models, run_config),
            )
        )
    return points


def write_sweep_csv(points: list[SweepPoint], fileobj: IO[str]) -> None:
    writer = csv.writer(fileobj)
    writer.writerow(["threshold", "precision", "recall", "f1", "n_candidates"])
    for p in points:
        writer.writerow([p.threshold, p.precision, p.recall, p.f1, p.n_candidates])


def write_sweep_json(points: list[SweepPoint], fileobj: IO[str]) -> None:
    json.dump([vars(p) for p in points], fileobj, indent=2)
    fileobj.write("\n")


# ---------------------------------------------------------------------------
# Prediction serialization
# ---------------------------------------------------------------------------


def write_predictions(
    predictions: dict[str, list[LabeledSpan]], fileobj: IO[str]
) -> None:
    """One line per sentence; multi-label spans emit one record per category."""
    for uid, spans in predictions.items():
        records = [
            {"start": s.start, "end": s.end, "category": c, "score": s.score_of(c)}
            for s in spans
            for c in s.categories
        ]
        fileobj.write(json.dumps({"uid": uid, "spans": records}) + "\n")


def load_predictions(fileobj: IO[str] | IO[bytes]) -> dict[str, set[tuple[int, int, str]]]:
    predictions: dict[str, set[tuple[int, int, str]]] = {}
    for lineno, raw in enumerate(fileobj, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            uid = record["uid"]
            spans = {
                (int(s["start"]), int(s["end"]), str(s["category"]))
                for s in record["spans"]
            }
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise PicospanError(f"predictions line {lineno}: {exc}") from None
        predictions.setdefault(uid, set()).update(spans)
    return predictions
