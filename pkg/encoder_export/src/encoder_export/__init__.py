"""Export pretrained-transformer token vectors to PCXE embedding files."""

from encoder_export.errors import AlignmentError, ExportError
from encoder_export.exporter import (
    POOLINGS,
    ExportReport,
    PretrainedEncoder,
    SentenceTokens,
    align_word_ids,
    encode_sentence,
    export_corpus,
    pool_pieces,
    read_sentences,
)
from encoder_export.pcxe import PCXE_MAGIC, PCXE_VERSION, write_pcxe

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "ExportError",
    "ExportReport",
    "PCXE_MAGIC",
    "PCXE_VERSION",
    "POOLINGS",
    "PretrainedEncoder",
    "SentenceTokens",
    "align_word_ids",
    "encode_sentence",
    "export_corpus",
    "pool_pieces",
    "read_sentences",
    "write_pcxe",
    "__version__",
]
