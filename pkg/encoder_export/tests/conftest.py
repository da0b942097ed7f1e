"""Shared fixture: a tiny randomly initialized BERT checkpoint on disk.

The full encoder stack is exercised for real (fast-tokenizer alignment,
transformer forward pass, pooling); only the weights are random. The
vocabulary is character-level wordpiece: every printable ASCII character
plus its continuation form. That keeps the checkpoint small while making
every real word split into multiple pieces, which is exactly the case
the aligner exists for.
"""

import string

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizerFast
from transformers.utils import logging as hf_logging

hf_logging.set_verbosity_error()
hf_logging.disable_progress_bar()

HIDDEN = 32
MAX_PIECES = 320


@pytest.fixture(scope="session")
def tiny_encoder_dir(tmp_path_factory) -> str:
    target = tmp_path_factory.mktemp("tiny-encoder")
    chars = [c for c in string.printable if not c.isspace()]
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab += chars + ["##" + c for c in chars]
    (target / "vocab.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast.from_pretrained(str(target))
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=HIDDEN,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=37,
        max_position_embeddings=MAX_PIECES,
    )
    model = BertModel(config)
    model.eval()
    model.save_pretrained(str(target))
    tokenizer.save_pretrained(str(target))
    return str(target)
