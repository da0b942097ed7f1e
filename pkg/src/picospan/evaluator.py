"""Span-level exact-match scoring with grouped breakdowns.

A prediction counts as a true positive only when its (start, end,
category) triple equals a gold entity exactly. Micro metrics pool counts
across categories; macro metrics average the per-category precision,
recall and F1 each on their own. Group breakdowns cover the overlap split
(sentences with/without intersecting gold entities) and entity-length
buckets, plus a paired t-test over per-document scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from scipy import stats

from picospan.corpus import CATEGORIES, Corpus, Sentence, overlap_partition
from picospan.errors import EvaluationError

Triple = tuple[int, int, str]  # (start, end, category)

LENGTH_BUCKETS = ("1", "2-5", ">5")


def length_bucket(length: int) -> str:
    if length <= 1:
        return "1"
    if length <= 5:
        return "2-5"
    return ">5"


@dataclass(frozen=True)
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass
class MatchCounts:
    per_category: dict[str, Counts] = field(
        default_factory=lambda: {c: Counts() for c in CATEGORIES}
    )

    def pooled(self) -> Counts:
        total = Counts()
        for counts in self.per_category.values():
            total = total + counts
        return total

    def merge(self, other: "MatchCounts") -> "MatchCounts":
        merged = MatchCounts()
        for cat in CATEGORIES:
            merged.per_category[cat] = self.per_category[cat] + other.per_category[cat]
        return merged


@dataclass(frozen=True)
class Scores:
    precision: float
    recall: float
    f1: float


@dataclass
class EvalReport:
    per_category: dict[str, Scores]
    micro: Scores
    macro: Scores
    counts: MatchCounts
    groups: dict[str, "EvalReport"] | None = None

    def to_dict(self) -> dict:
        out = {
            "per_category": {
                cat: vars(self.per_category[cat]) | vars(self.counts.per_category[cat])
                for cat in CATEGORIES
            },
            "micro": vars(self.micro) | vars(self.counts.pooled()),
            "macro": vars(self.macro),
        }
        if self.groups is not None:
            out["groups"] = {name: rep.to_dict() for name, rep in self.groups.items()}
        return out

    def csv_rows(self) -> list[dict]:
        """Flat rows (group x category) for the CSV report."""
        rows = []
        scopes = [("all", self)] + list((self.groups or {}).items())
        for group, report in scopes:
            for cat in CATEGORIES:
                counts = report.counts.per_category[cat]
                rows.append(
                    {"group": group, "category": cat}
                    | vars(report.per_category[cat])
                    | vars(counts)
                )
            rows.append(
                {"group": group, "category": "micro"}
                | vars(report.micro)
                | vars(report.counts.pooled())
            )
            rows.append(
                {"group": group, "category": "macro"}
                | vars(report.macro)
                | {"tp": "", "fp": "", "fn": ""}
            )
        return rows


def _as_triples(spans: Iterable) -> set[Triple]:
    """Normalize predictions/gold to exact-match (start, end, category) triples."""
    triples: set[Triple] = set()
    for span in spans:
        if isinstance(span, tuple) and len(span) == 3:
            start, end, category = span
            triples.add((int(start), int(end), str(category)))
        elif hasattr(span, "categories"):  # LabeledSpan
            for category in span.categories:
                triples.add((span.start, span.end, category))
        elif hasattr(span, "category"):  # Entity
            triples.add((span.start, span.end, span.category))
        else:
            raise EvaluationError(f"cannot interpret span record {span!r}")
    return triples


def match(pred: Iterable, gold: Iterable) -> MatchCounts:
    """Exact-match counts per category for one sentence."""
    pred_triples = _as_triples(pred)
    gold_triples = _as_triples(gold)
    counts = MatchCounts()
    for cat in CATEGORIES:
        p = {t for t in pred_triples if t[2] == cat}
        g = {t for t in gold_triples if t[2] == cat}
        counts.per_category[cat] = Counts(
            tp=len(p & g), fp=len(p - g), fn=len(g - p)
        )
    return counts


def _prf(counts: Counts) -> Scores:
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return Scores(precision, recall, f1)


def metrics(counts: MatchCounts) -> EvalReport:
    """Per-category, pooled-micro and averaged-macro scores from raw counts."""
    per_category = {cat: _prf(counts.per_category[cat]) for cat in CATEGORIES}
    micro = _prf(counts.pooled())
    macro = Scores(
        precision=sum(s.precision for s in per_category.values()) / len(CATEGORIES),
        recall=sum(s.recall for s in per_category.values()) / len(CATEGORIES),
        f1=sum(s.f1 for s in per_category.values()) / len(CATEGORIES),
    )
    return EvalReport(per_category, micro, macro, counts)


Predictions = Mapping[str, Iterable]  # uid -> spans


def _check_alignment(predictions: Predictions, gold: Corpus) -> dict[str, Sentence]:
    index = gold.uid_index()
    unknown = set(predictions) - set(index)
    if unknown:
        raise EvaluationError(
            f"predictions reference unknown sentence uids: {sorted(unknown)[:5]}"
        )
    return index


def evaluate(predictions: Predictions, gold: Corpus) -> EvalReport:
    """Corpus-level report; sentences without a prediction entry count as empty."""
    _check_alignment(predictions, gold)
    counts = MatchCounts()
    for sentence in gold.sentences():
        counts = counts.merge(
            match(predictions.get(sentence.uid, ()), sentence.entities)
        )
    return metrics(counts)


def evaluate_grouped(
    predictions: Predictions, gold: Corpus, grouping: str
) -> EvalReport:
    """Overall report plus per-group breakdowns.

    ``overlap`` scores sentence groups (with/without intersecting gold
    entities) separately. ``length`` buckets entities by token count: a
    missed gold entity lands in the bucket of its own length, a spurious
    prediction in the bucket of its predicted length; a true positive has
    the same length on both sides by exactness.
    """
    index = _check_alignment(predictions, gold)
    report = evaluate(predictions, gold)
    if grouping == "overlap":
        overlapped, plain = overlap_partition(gold)
        groups = {}
        for name, uids in (("overlapped", overlapped), ("non_overlapped", plain)):
            counts = MatchCounts()
            for uid in sorted(uids):
                counts = counts.merge(
                    match(predictions.get(uid, ()), index[uid].entities)
                )
            groups[name] = metrics(counts)
        report.groups = groups
    elif grouping == "length":
        bucket_counts = {name: MatchCounts() for name in LENGTH_BUCKETS}
        for sentence in gold.sentences():
            pred_triples = _as_triples(predictions.get(sentence.uid, ()))
            gold_triples = _as_triples(sentence.entities)
            for start, end, cat in pred_triples & gold_triples:
                _bump(bucket_counts, start, end, cat, "tp")
            for start, end, cat in pred_triples - gold_triples:
                _bump(bucket_counts, start, end, cat, "fp")
            for start, end, cat in gold_triples - pred_triples:
                _bump(bucket_counts, start, end, cat, "fn")
        report.groups = {name: metrics(bucket_counts[name]) for name in LENGTH_BUCKETS}
    else:
        raise EvaluationError(f"unknown grouping {grouping!r}")
    return report


def _bump(
    bucket_counts: dict[str, MatchCounts], start: int, end: int, cat: str, kind: str
) -> None:
    bucket = length_bucket(end - start + 1)
    increment = Counts(
        tp=int(kind == "tp"), fp=int(kind == "fp"), fn=int(kind == "fn")
    )
    bucket_counts[bucket].per_category[cat] = (
        bucket_counts[bucket].per_category[cat] + increment
    )


def per_document_micro_f1(predictions: Predictions, gold: Corpus) -> list[float]:
    """Micro-F1 per document, in corpus order; the paired-test unit."""
    _check_alignment(predictions, gold)
    scores = []
    for doc in gold.documents:
        counts = MatchCounts()
        for sentence in doc.sentences:
            counts = counts.merge(
                match(predictions.get(sentence.uid, ()), sentence.entities)
            )
        scores.append(metrics(counts).micro.f1)
    return scores


@dataclass(frozen=True)
class PairedTestResult:
    t_statistic: float
    p_value: float
    zero_variance: bool = False


def paired_test(scores_a: list[float], scores_b: list[float]) -> PairedTestResult:
    """Two-sided paired t-test on per-unit score differences.

    Identical lists report (t=0, p=1) by convention; nonzero mean with zero
    variance reports p=0 with the zero-variance flag set, since the t
    statistic degenerates.
    """
    if len(scores_a) != len(scores_b):
        raise EvaluationError(
            f"paired test needs equal lengths, got {len(scores_a)} and {len(scores_b)}"
        )
    n = len(scores_a)
    if n < 2:
        raise EvaluationError("paired test needs at least 2 units")
    diffs = [a - b for a, b in zip(scores_a, scores_b)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        if mean == 0.0:
            return PairedTestResult(0.0, 1.0)
        return PairedTestResult(math.copysign(math.inf, mean), 0.0, zero_variance=True)
    t_stat = mean / math.sqrt(var / n)
    p_value = 2.0 * float(stats.t.sf(abs(t_stat), df=n - 1))
    return PairedTestResult(t_stat, p_value)
