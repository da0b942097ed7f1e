"""Offline bridge from a pretrained contextual encoder to PCXE files.

The extraction pipeline works on whole corpus tokens, but transformer
checkpoints tokenize into subword pieces. This module runs a frozen
encoder over each sentence (no fine-tuning, feature extraction only),
groups the piece vectors back onto the corpus tokens that produced them,
pools each group into one vector, and writes the result in the PCXE
container the pipeline's file-backed embedder reads.

Sentences longer than the encoder's position limit are skipped with a
warning rather than silently truncated: a truncated sentence would get a
row count that no longer matches its token count and the loader would
reject it anyway.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from encoder_export.errors import AlignmentError, ExportError
from encoder_export.pcxe import write_pcxe

log = logging.getLogger("encoder_export")

POOLINGS = ("mean", "first")

# checkpoints without a declared length limit report a huge sentinel
# through tokenizer.model_max_length; treat anything that large as "none"
_MAX_LEN_SENTINEL = 10**9


@dataclass(frozen=True)
class SentenceTokens:
    """One corpus sentence, reduced to what the exporter needs."""

    uid: str
    tokens: tuple[str, ...]


def read_sentences(path: str) -> list[SentenceTokens]:
    """Load (uid, tokens) pairs from a corpus JSONL file.

    Each line is a document object with a doc_id and a list of sentences;
    entity annotations are ignored here, the exporter only embeds tokens.
    Validation covers exactly what the export depends on: unique non-empty
    uids and non-empty token lists.
    """
    out: list[SentenceTokens] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExportError(f"line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict) or "doc_id" not in record:
                raise ExportError(f"line {lineno}: expected a document object with a doc_id")
            sentences = record.get("sentences", [])
            if not isinstance(sentences, list):
                raise ExportError(f"line {lineno}: sentences must be a list")
            for sent in sentences:
                uid = sent.get("uid") if isinstance(sent, dict) else None
                tokens = sent.get("tokens") if isinstance(sent, dict) else None
                if not isinstance(uid, str) or not uid:
                    raise ExportError(f"line {lineno}: sentence without a uid")
                if uid in seen:
                    raise ExportError(f"line {lineno}: duplicate sentence uid {uid!r}")
                if (
                    not isinstance(tokens, list)
                    or not tokens
                    or not all(isinstance(t, str) and t for t in tokens)
                ):
                    raise ExportError(
                        f"line {lineno}: sentence {uid!r} needs a non-empty "
                        "list of non-empty string tokens"
                    )
                seen.add(uid)
                out.append(SentenceTokens(uid, tuple(tokens)))
    return out


def align_word_ids(
    word_ids: Sequence[int | None], n_tokens: int, uid: str = ""
) -> tuple[tuple[int, ...], ...]:
    """Group subword piece indices by the corpus token they came from.

    ``word_ids`` is the per-piece token index reported by a fast
    tokenizer called with pre-split words (None for special tokens).
    Returns one ordered tuple of piece indices per corpus token. A token
    that vanished under tokenizer normalization (so no piece points back
    at it) is a hard error: dropping it would desynchronize every span
    annotation to its right.
    """
    where = f"sentence {uid!r}" if uid else "sentence"
    groups: list[list[int]] = [[] for _ in range(n_tokens)]
    previous = -1
    for piece_index, word in enumerate(word_ids):
        if word is None:
            continue
        if not 0 <= word < n_tokens:
            raise AlignmentError(
                f"{where}: piece {piece_index} maps to token {word}, "
                f"outside 0..{n_tokens - 1}"
            )
        if word < previous:
            raise AlignmentError(f"{where}: piece {piece_index} is out of order")
        previous = word
        groups[word].append(piece_index)
    for token_index, group in enumerate(groups):
        if not group:
            raise AlignmentError(
                f"{where}: token {token_index} produced no subword pieces "
                "(tokenizer normalization removed it)"
            )
    return tuple(tuple(g) for g in groups)


class PretrainedEncoder:
    """Frozen feature extractor around a transformers checkpoint.

    Loads the tokenizer and weights once; everything downstream is a pure
    function of them, so repeated exports of the same corpus are
    byte-identical.
    """

    def __init__(self, name_or_path: str):
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(name_or_path)
            self.model = AutoModel.from_pretrained(name_or_path)
        except ValueError as exc:
            raise ExportError(f"cannot load encoder {name_or_path!r}: {exc}") from exc
        if not self.tokenizer.is_fast:
            raise ExportError(
                f"encoder {name_or_path!r} has no fast tokenizer; "
                "piece-to-token alignment needs word_ids()"
            )
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)
        self.max_pieces = self._position_limit()

    def _position_limit(self) -> int | None:
        limit = getattr(self.model.config, "max_position_embeddings", None)
        if limit is None:
            declared = self.tokenizer.model_max_length
            limit = declared if declared and declared < _MAX_LEN_SENTINEL else None
        return int(limit) if limit is not None else None

    def tokenize(self, tokens: Sequence[str]):
        """Tokenize one pre-split sentence, keeping piece-to-word mapping."""
        return self.tokenizer(list(tokens), is_split_into_words=True)

    def piece_vectors(self, encoding) -> np.ndarray:
        """Run the encoder over one tokenized sentence; (n_pieces, dim) float32."""
        ids = torch.tensor([encoding["input_ids"]], dtype=torch.long)
        with torch.no_grad():
            hidden = self.model(
                input_ids=ids, attention_mask=torch.ones_like(ids)
            ).last_hidden_state[0]
        return hidden.to(torch.float32).numpy()


def pool_pieces(
    pieces: np.ndarray, alignment: Sequence[Sequence[int]], pooling: str
) -> np.ndarray:
    """Collapse each token's piece vectors into one float32 row."""
    if pooling not in POOLINGS:
        raise ExportError(f"pooling must be one of {POOLINGS}, got {pooling!r}")
    rows = np.empty((len(alignment), pieces.shape[1]), dtype=np.float32)
    for token_index, group in enumerate(alignment):
        if pooling == "first":
            rows[token_index] = pieces[group[0]]
        else:
            rows[token_index] = pieces[np.asarray(group)].mean(axis=0, dtype=np.float32)
    return rows


def encode_sentence(
    encoder: PretrainedEncoder,
    tokens: Sequence[str],
    pooling: str = "mean",
    uid: str = "",
) -> np.ndarray:
    """Per-token float32 vectors for one sentence, shape (len(tokens), dim)."""
    encoding = encoder.tokenize(tokens)
    alignment = align_word_ids(encoding.word_ids(), len(tokens), uid=uid)
    return pool_pieces(encoder.piece_vectors(encoding), alignment, pooling)


@dataclass(frozen=True)
class ExportReport:
    """What an export run produced: output path, vector dimension,
    uids written in order, and uids skipped for exceeding the encoder's
    position limit."""

    path: str
    dim: int
    pooling: str
    written: tuple[str, ...]
    skipped: tuple[str, ...]


def export_corpus(
    corpus_path: str,
    encoder: str | PretrainedEncoder,
    out_path: str,
    pooling: str = "mean",
) -> ExportReport:
    """Embed every sentence of a corpus file and write a PCXE file.

    ``encoder`` is a checkpoint name/directory or an already loaded
    PretrainedEncoder. Output records appear in corpus order, one per
    sentence uid; over-length sentences are reported and skipped.
    """
    if pooling not in POOLINGS:
        raise ExportError(f"pooling must be one of {POOLINGS}, got {pooling!r}")
    sentences = read_sentences(corpus_path)
    if isinstance(encoder, str):
        encoder = PretrainedEncoder(encoder)
    records: list[tuple[str, np.ndarray]] = []
    skipped: list[str] = []
    for sent in sentences:
        encoding = encoder.tokenize(sent.tokens)
        n_pieces = len(encoding["input_ids"])
        if encoder.max_pieces is not None and n_pieces > encoder.max_pieces:
            log.warning(
                "skipping sentence %r: %d subword pieces exceed the "
                "encoder position limit of %d",
                sent.uid,
                n_pieces,
                encoder.max_pieces,
            )
            skipped.append(sent.uid)
            continue
        alignment = align_word_ids(encoding.word_ids(), len(sent.tokens), uid=sent.uid)
        rows = pool_pieces(encoder.piece_vectors(encoding), alignment, pooling)
        records.append((sent.uid, rows))
    write_pcxe(out_path, encoder.dim, records)
    return ExportReport(
        path=out_path,
        dim=encoder.dim,
        pooling=pooling,
        written=tuple(uid for uid, _ in records),
        skipped=tuple(skipped),
    )
