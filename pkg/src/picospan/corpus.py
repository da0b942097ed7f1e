"""Data model and I/O for tokenized corpora with overlapping span annotations.

A corpus is a list of documents, each a list of sentences. Sentences carry
pre-tokenized text and entity spans given as inclusive token-index ranges.
Spans may nest or overlap arbitrarily; only exact duplicates (same start,
end and category) are rejected. Everything is immutable after construction
so corpora can be shared freely across threads.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import IntEnum
from typing import IO, Iterable, Iterator, Union

from picospan.errors import CorpusError

CATEGORIES = ("P", "I", "O")


class PositionLabel(IntEnum):
    """Per-token boundary role relative to the entities covering the token.

    The integer order is fixed and is the category order used everywhere a
    five-way probability row is serialized or indexed.
    """

    INSIDE = 0
    OUTSIDE = 1
    START = 2
    END = 3
    BOTH_START_AND_END = 4


POSITION_LABEL_NAMES = ("inside", "outside", "start", "end", "both-start-and-end")


@dataclass(frozen=True, order=True)
class Entity:
    """A labeled span: token indices are 0-based and inclusive on both ends."""

    start: int
    end: int
    category: str

    def __post_init__(self) -> None:
        if not (0 <= self.start <= self.end):
            raise CorpusError(
                f"entity out of bounds: start={self.start} end={self.end}"
            )
        if self.category not in CATEGORIES:
            raise CorpusError(f"unknown category {self.category!r}")

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def overlaps(self, other: "Entity") -> bool:
        """True when the two spans share at least one token index."""
        return self.start <= other.end and other.start <= self.end


@dataclass(frozen=True)
class Sentence:
    uid: str
    tokens: tuple[str, ...]
    entities: tuple[Entity, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "entities", tuple(self.entities))
        seen = set()
        for ent in self.entities:
            if ent.end >= len(self.tokens):
                raise CorpusError(
                    f"entity out of bounds in sentence {self.uid!r}: "
                    f"({ent.start}, {ent.end}) with {len(self.tokens)} tokens"
                )
            key = (ent.start, ent.end, ent.category)
            if key in seen:
                raise CorpusError(f"duplicate entity {key} in sentence {self.uid!r}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.tokens)

    def has_overlap(self) -> bool:
        """True when any pair of gold entities shares a token index."""
        spans = sorted((e.start, e.end) for e in self.entities)
        max_end = -1
        for start, end in spans:
            if start <= max_end:
                return True
            max_end = max(max_end, end)
        return False


@dataclass(frozen=True)
class Document:
    doc_id: str
    sentences: tuple[Sentence, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sentences", tuple(self.sentences))


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "documents", tuple(self.documents))
        seen: set[str] = set()
        for doc in self.documents:
            for sent in doc.sentences:
                if sent.uid in seen:
                    raise CorpusError(f"duplicate sentence uid {sent.uid!r}")
                seen.add(sent.uid)

    def sentences(self) -> Iterator[Sentence]:
        for doc in self.documents:
            yield from doc.sentences

    def n_sentences(self) -> int:
        return sum(len(doc.sentences) for doc in self.documents)

    def n_documents(self) -> int:
        return len(self.documents)

    def uid_index(self) -> dict[str, Sentence]:
        return {sent.uid: sent for sent in self.sentences()}


# ---------------------------------------------------------------------------
# JSONL corpus format
# ---------------------------------------------------------------------------

Stream = Union[IO[bytes], IO[str], Iterable[Union[bytes, str]]]


def _decode_lines(stream: Stream) -> Iterator[tuple[int, str]]:
    for lineno, raw in enumerate(stream, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        yield lineno, line


def _parse_entity(obj: object, lineno: int, uid: str) -> Entity:
    if not isinstance(obj, dict):
        raise CorpusError(f"line {lineno}: entity record must be an object")
    try:
        start, end, category = obj["start"], obj["end"], obj["category"]
    except KeyError as exc:
        raise CorpusError(f"line {lineno}: entity missing field {exc}") from None
    if not isinstance(start, int) or not isinstance(end, int):
        raise CorpusError(f"line {lineno}: entity indices must be integers")
    try:
        return Entity(start, end, str(category))
    except CorpusError as exc:
        raise CorpusError(f"line {lineno}: sentence {uid!r}: {exc}") from None


def parse_jsonl(stream: Stream) -> Corpus:
    """Parse one document per line; raises CorpusError with the line number.

    Schema per line::

        {"doc_id": str, "sentences": [{"uid": str, "tokens": [str],
         "entities": [{"start": int, "end": int, "category": "P"|"I"|"O"}]}]}
    """
    documents = []
    for lineno, line in _decode_lines(stream):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: malformed JSON: {exc.msg}") from None
        if not isinstance(record, dict) or "doc_id" not in record:
            raise CorpusError(f"line {lineno}: expected an object with 'doc_id'")
        sentences = []
        for sent_obj in record.get("sentences", []):
            if not isinstance(sent_obj, dict):
                raise CorpusError(f"line {lineno}: sentence record must be an object")
            uid = sent_obj.get("uid")
            tokens = sent_obj.get("tokens")
            if not isinstance(uid, str) or not isinstance(tokens, list):
                raise CorpusError(
                    f"line {lineno}: sentence needs a string 'uid' and a 'tokens' list"
                )
            entities = [
                _parse_entity(e, lineno, uid) for e in sent_obj.get("entities", [])
            ]
            try:
                sentences.append(Sentence(uid, tuple(tokens), tuple(entities)))
            except CorpusError as exc:
                raise CorpusError(f"line {lineno}: {exc}") from None
        documents.append(Document(str(record["doc_id"]), tuple(sentences)))
    return Corpus(tuple(documents))


def corpus_to_jsonl(corpus: Corpus, fileobj: IO[str]) -> None:
    for doc in corpus.documents:
        record = {
            "doc_id": doc.doc_id,
            "sentences": [
                {
                    "uid": sent.uid,
                    "tokens": list(sent.tokens),
                    "entities": [
                        {"start": e.start, "end": e.end, "category": e.category}
                        for e in sent.entities
                    ],
                }
                for sent in doc.sentences
            ],
        }
        fileobj.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_corpus(path: str) -> Corpus:
    with open(path, "rb") as handle:
        return parse_jsonl(handle)


def save_corpus(corpus: Corpus, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        corpus_to_jsonl(corpus, handle)


# ---------------------------------------------------------------------------
# IOB2 import/export (non-overlapping corpora only)
# ---------------------------------------------------------------------------


def import_iob2(lines: Iterable[str], doc_id: str = "iob2") -> Corpus:
    """Rebuild entities from "token<TAB>tag" lines, blank line between sentences.

    Tags are O, B-X or I-X with X in {P, I, O}; a bare O marks a token outside
    any entity while B-O/I-O open or continue an Outcome span. An I-X that does
    not continue a B-X/I-X run of the same X is a dangling tag and an error.
    The format carries no document structure, so all sentences land in one
    document and uids are generated as "<doc_id>-<n>".
    """
    sentences: list[Sentence] = []
    tokens: list[str] = []
    tags: list[str] = []

    def flush() -> None:
        if not tokens:
            return
        uid = f"{doc_id}-{len(sentences)}"
        sentences.append(Sentence(uid, tuple(tokens), tuple(_entities_from_tags(tags, uid))))
        tokens.clear()
        tags.clear()

    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            flush()
            continue
        parts = line.split()
        if len(parts) != 2:
            raise CorpusError(f"line {lineno}: expected 'token<TAB>tag', got {line!r}")
        token, tag = parts
        if tag != "O" and not (
            len(tag) > 2 and tag[:2] in ("B-", "I-") and tag[2:] in CATEGORIES
        ):
            raise CorpusError(f"line {lineno}: unknown tag {tag!r}")
        tokens.append(token)
        tags.append(tag)
    flush()
    return Corpus((Document(doc_id, tuple(sentences)),))


def _entities_from_tags(tags: list[str], uid: str) -> list[Entity]:
    entities: list[Entity] = []
    open_cat: str | None = None
    open_start = 0
    for i, tag in enumerate(tags):
        if tag == "O":
            if open_cat is not None:
                entities.append(Entity(open_start, i - 1, open_cat))
                open_cat = None
            continue
        prefix, cat = tag[0], tag[2:]
        if prefix == "B":
            if open_cat is not None:
                entities.append(Entity(open_start, i - 1, open_cat))
            open_cat, open_start = cat, i
        else:  # I-X
            if open_cat != cat:
                raise CorpusError(f"dangling I-tag {tag!r} at token {i} in sentence {uid!r}")
    if open_cat is not None:
        entities.append(Entity(open_start, len(tags) - 1, open_cat))
    return entities


def export_iob2(corpus: Corpus) -> str:
    """Render a non-overlapping corpus as IOB2 text; overlaps are an error."""
    blocks = []
    for sent in corpus.sentences():
        if sent.has_overlap():
            raise CorpusError(
                f"sentence {sent.uid!r} has overlapping entities; "
                "IOB2 cannot represent them"
            )
        tags = ["O"] * len(sent.tokens)
        for ent in sorted(sent.entities):
            tags[ent.start] = f"B-{ent.category}"
            for i in range(ent.start + 1, ent.end + 1):
                tags[i] = f"I-{ent.category}"
        blocks.append("\n".join(f"{tok}\t{tag}" for tok, tag in zip(sent.tokens, tags)))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


# ---------------------------------------------------------------------------
# Gold boundary labels
# ---------------------------------------------------------------------------


def derive_position_labels(sentence: Sentence) -> list[PositionLabel]:
    """Five-way gold boundary label per token, aggregated over all entities.

    A token starting any entity and ending any entity (the same single-token
    entity or two distinct ones) is BOTH_START_AND_END; otherwise starting
    wins over ending, and both win over plain coverage. The boundary-dominant
    priority keeps every gold boundary recoverable from the label sequence,
    which is what candidate enumeration depends on downstream.
    """
    n = len(sentence.tokens)
    is_start = [False] * n
    is_end = [False] * n
    covered = [False] * n
    for ent in sentence.entities:
        is_start[ent.start] = True
        is_end[ent.end] = True
        for i in range(ent.start, ent.end + 1):
            covered[i] = True
    labels = []
    for i in range(n):
        if is_start[i] and is_end[i]:
            labels.append(PositionLabel.BOTH_START_AND_END)
        elif is_start[i]:
            labels.append(PositionLabel.START)
        elif is_end[i]:
            labels.append(PositionLabel.END)
        elif covered[i]:
            labels.append(PositionLabel.INSIDE)
        else:
            labels.append(PositionLabel.OUTSIDE)
    return labels


# ---------------------------------------------------------------------------
# Splitting and grouping
# ---------------------------------------------------------------------------


def split(corpus: Corpus, val_fraction: float, seed: int) -> tuple[Corpus, Corpus]:
    """Document-level train/validation partition, deterministic under seed.

    The validation set gets round(val_fraction * n_documents) documents;
    document order within each part follows the input corpus.
    """
    if not 0.0 <= val_fraction <= 1.0:
        raise CorpusError(f"val_fraction must be in [0, 1], got {val_fraction}")
    n = len(corpus.documents)
    k = int(round(val_fraction * n))
    rng = random.Random(seed)
    val_idx = set(rng.sample(range(n), k))
    train_docs = tuple(d for i, d in enumerate(corpus.documents) if i not in val_idx)
    val_docs = tuple(d for i, d in enumerate(corpus.documents) if i in val_idx)
    return Corpus(train_docs), Corpus(val_docs)


def overlap_partition(corpus: Corpus) -> tuple[set[str], set[str]]:
    """Split sentence uids into (overlapped, non-overlapped) groups.

    A sentence is overlapped iff some pair of its gold entities shares at
    least one token index; sentences without entities are non-overlapped.
    """
    overlapped: set[str] = set()
    plain: set[str] = set()
    for sent in corpus.sentences():
        (overlapped if sent.has_overlap() else plain).add(sent.uid)
    return overlapped, plain
