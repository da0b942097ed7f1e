"""Composite-span negatives for the span classifier.

When a sentence holds several entities, candidate enumeration produces
spans whose start comes from one entity and whose end comes from another.
These composite spans are exactly the hard negatives the classifier must
learn to reject, so they are generated from the gold annotation and added
to its training data with an all-zero target.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from picospan.corpus import CATEGORIES, Corpus, Entity, Sentence

N_CATEGORIES = len(CATEGORIES)

_CATEGORY_PAIRS = tuple(
    (CATEGORIES[i], CATEGORIES[j])
    for i in range(N_CATEGORIES)
    for j in range(i + 1, N_CATEGORIES)
)


@dataclass(frozen=True)
class CompositeSpan:
    """A cross-boundary span; provenance records the entity pair behind it.

    Equality and hashing use only (start, end) so a set of composites
    deduplicates by extent, keeping the first provenance seen.
    """

    start: int
    end: int
    provenance: tuple[Entity, Entity] = field(compare=False, default=None)

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"composite span with start {self.start} > end {self.end}")


def composite_spans(
    l_a: Sequence[Entity], l_b: Sequence[Entity]
) -> set[CompositeSpan]:
    """Cross every entity of one list with every entity of the other.

    For a pair (a, b) the span (start of a, end of b) is kept when it is
    non-empty, and symmetrically (start of b, end of a). The two lists are
    meant to hold entities of two different categories from one sentence.
    """
    out: set[CompositeSpan] = set()
    for e_a in l_a:
        for e_b in l_b:
            if e_a.start <= e_b.end:
                out.add(CompositeSpan(e_a.start, e_b.end, (e_a, e_b)))
            if e_b.start <= e_a.end:
                out.add(CompositeSpan(e_b.start, e_a.end, (e_b, e_a)))
    return out


def sentence_negatives(sentence: Sentence) -> list[CompositeSpan]:
    """All composite negatives of one sentence, sorted by extent.

    Composites are drawn from every unordered pair of distinct categories;
    same-category pairs are skipped. Any composite whose extent coincides
    with a gold entity span is excluded: labeling a true entity extent as
    a negative would only inject noise.
    """
    by_category: dict[str, list[Entity]] = {c: [] for c in CATEGORIES}
    for ent in sentence.entities:
        by_category[ent.category].append(ent)
    gold_extents = {(e.start, e.end) for e in sentence.entities}
    negatives: set[CompositeSpan] = set()
    for cat_a, cat_b in _CATEGORY_PAIRS:
        negatives |= composite_spans(by_category[cat_a], by_category[cat_b])
    return sorted(
        (c for c in negatives if (c.start, c.end) not in gold_extents),
        key=lambda c: (c.start, c.end),
    )


def build_training_set(
    corpus: Corpus, embedder, enable_augmentation: bool = True
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Assemble (span vector, 0/1 category target) pairs for classifier fit.

    Positives cover every distinct gold extent, with a multi-hot target
    when one extent carries several categories. With augmentation enabled,
    composite negatives are appended with an all-zero target.
    """
    from picospan.embedder import span_vector

    examples: list[tuple[np.ndarray, np.ndarray]] = []
    for sentence in corpus.sentences():
        if not sentence.entities:
            continue
        token_matrix = embedder.encode_tokens(sentence)
        targets: dict[tuple[int, int], np.ndarray] = {}
        for ent in sentence.entities:
            target = targets.setdefault(
                (ent.start, ent.end), np.zeros(N_CATEGORIES)
            )
            target[CATEGORIES.index(ent.category)] = 1.0
        for (start, end) in sorted(targets):
            examples.append((span_vector(token_matrix, start, end), targets[(start, end)]))
        if enable_augmentation:
            for comp in sentence_negatives(sentence):
                examples.append(
                    (span_vector(token_matrix, comp.start, comp.end), np.zeros(N_CATEGORIES))
                )
    return examples
