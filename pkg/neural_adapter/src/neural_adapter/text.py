"""JSONL access and whitespace-level tokenizers shared by both models."""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Iterable, Iterator

from tokenizers import Tokenizer, models, pre_tokenizers, processors
from transformers import PreTrainedTokenizerFast

from .errors import ContractError

MASK_RE = re.compile(r"<span_(\d+)>")
_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")

# Mask tokens are added to every generator vocabulary up front so that
# decoding can suppress them by id even when the training file happens
# to use only some of them.
MASK_TOKENS = tuple(f"<span_{i}>" for i in range(10))


def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ContractError(f"{path}: line {line_no}: invalid JSON: {exc}")


def write_jsonl(path: str | Path, records: Iterable[dict]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for rec in records:
            handle.write(json.dumps(rec, ensure_ascii=False) + "\n")
            count += 1
    return count


def split_sentences(text: str) -> list[str]:
    """Naive sentence segmentation; an empty text is one empty sentence."""
    parts = [p for p in _SENTENCE_RE.split(text.strip()) if p]
    return parts or [""]


def _word_vocab(texts: Iterable[str], specials: list[str]) -> dict[str, int]:
    vocab = {token: i for i, token in enumerate(specials)}
    for text in texts:
        for word in text.split():
            vocab.setdefault(word, len(vocab))
    return vocab


def seq2seq_tokenizer(texts: Iterable[str]) -> PreTrainedTokenizerFast:
    """Whitespace word-level tokenizer for from-scratch seq2seq runs.

    WhitespaceSplit keeps mask tokens like <span_0> as single symbols.
    """
    specials = ["<pad>", "</s>", "<unk>", *MASK_TOKENS]
    vocab = _word_vocab(texts, specials)
    tok = Tokenizer(models.WordLevel(vocab=vocab, unk_token="<unk>"))
    tok.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    return PreTrainedTokenizerFast(
        tokenizer_object=tok,
        pad_token="<pad>",
        eos_token="</s>",
        unk_token="<unk>",
    )


def pair_tokenizer(texts: Iterable[str]) -> PreTrainedTokenizerFast:
    """Whitespace word-level tokenizer for premise/hypothesis pairs."""
    specials = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"]
    vocab = _word_vocab(texts, specials)
    tok = Tokenizer(models.WordLevel(vocab=vocab, unk_token="[UNK]"))
    tok.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    tok.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B:1 [SEP]:1",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    return PreTrainedTokenizerFast(
        tokenizer_object=tok,
        pad_token="[PAD]",
        unk_token="[UNK]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        model_input_names=["input_ids", "token_type_ids", "attention_mask"],
    )


def mask_token_ids(tokenizer: PreTrainedTokenizerFast) -> list[int]:
    """Vocabulary ids of every token that would count as a residual mask."""
    return [idx for token, idx in tokenizer.get_vocab().items()
            if MASK_RE.fullmatch(token)]
