"""Fine-tune a seq2seq model on formatted perturbation examples and run it.

The exchange formats are the pipeline's JSON Lines contracts:

    training file:  {"doc_id", "summary_index", "mode": "train", "code",
                     "input", "target", ...}
    batch file:     {"doc_id", "summary_index", "code", "input"}
    output file:    {"doc_id", "summary_index", "code", "generated"}

``--from-scratch`` builds a small randomly initialized encoder-decoder
over a whitespace vocabulary taken from the training file, which is
enough for offline smoke runs; otherwise ``model_name`` names any
pretrained seq2seq checkpoint.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch
from torch.utils.data import DataLoader, TensorDataset
from transformers import (
    AutoModelForSeq2SeqLM,
    AutoTokenizer,
    GenerationConfig,
    LogitsProcessor,
    LogitsProcessorList,
    T5Config,
    T5ForConditionalGeneration,
)

from .configs import CODES, GeneratorTrainingConfig
from .errors import ConfigError, ContractError
from .text import mask_token_ids, read_jsonl, seq2seq_tokenizer, write_jsonl

TRAINING_CONFIG_NAME = "training_config.json"
TRAINING_LOG_NAME = "training_log.json"

_OPTIMIZERS = {
    "adamw": torch.optim.AdamW,
    "adam": torch.optim.Adam,
    "sgd": torch.optim.SGD,
}

_INFERENCE_BATCH = 16


class _SuppressTokens(LogitsProcessor):
    """Hard-ban a set of token ids during decoding."""

    def __init__(self, token_ids: list[int]):
        self.token_ids = token_ids

    def __call__(self, input_ids, scores):
        if self.token_ids:
            scores[:, self.token_ids] = float("-inf")
        return scores


def _require(rec: dict, field: str, kind) -> bool:
    value = rec.get(field)
    return isinstance(value, kind) and not isinstance(value, bool)


def load_training_records(path: str | Path) -> list[dict]:
    """Read a train-mode formatted file, aborting on any malformed line."""
    records, bad = [], []
    for line_no, rec in read_jsonl(path):
        ok = (
            _require(rec, "doc_id", str)
            and _require(rec, "summary_index", int)
            and rec.get("mode") == "train"
            and rec.get("code") in CODES
            and _require(rec, "input", str) and rec["input"].strip()
            and _require(rec, "target", str) and rec["target"].strip()
        )
        if ok:
            records.append(rec)
        else:
            bad.append(line_no)
    if bad:
        raise ContractError(
            f"{path}: invalid training records on lines "
            + ", ".join(str(n) for n in bad))
    if not records:
        raise ContractError(f"{path}: no training records")
    return records


def load_batch_records(path: str | Path) -> list[tuple[int, dict]]:
    """Read a generation batch, aborting on any malformed line."""
    records, bad = [], []
    for line_no, rec in read_jsonl(path):
        ok = (
            _require(rec, "doc_id", str)
            and _require(rec, "summary_index", int)
            and rec.get("code") in CODES
            and _require(rec, "input", str) and rec["input"].strip()
        )
        if ok:
            records.append((line_no, rec))
        else:
            bad.append(line_no)
    if bad:
        raise ContractError(
            f"{path}: invalid batch records on lines "
            + ", ".join(str(n) for n in bad))
    return records


def _tiny_seq2seq(tokenizer) -> T5ForConditionalGeneration:
    config = T5Config(
        vocab_size=len(tokenizer),
        d_model=64,
        d_kv=16,
        d_ff=128,
        num_layers=2,
        num_heads=4,
        pad_token_id=tokenizer.pad_token_id,
        eos_token_id=tokenizer.eos_token_id,
        decoder_start_token_id=tokenizer.pad_token_id,
    )
    return T5ForConditionalGeneration(config)


def _encode_training(records, tokenizer, config) -> TensorDataset:
    enc = tokenizer(
        [r["input"] for r in records],
        padding=True, truncation=True,
        max_length=config.max_source_length, return_tensors="pt")
    labels = tokenizer(
        text_target=[r["target"] for r in records],
        padding=True, truncation=True,
        max_length=config.max_target_length, return_tensors="pt")["input_ids"]
    labels = labels.masked_fill(labels == tokenizer.pad_token_id, -100)
    return TensorDataset(enc["input_ids"], enc["attention_mask"], labels)


def _generation_config(config: GeneratorTrainingConfig, model) -> GenerationConfig:
    return GenerationConfig(
        num_beams=config.beam_size,
        min_length=config.min_length,
        max_length=config.max_length,
        repetition_penalty=config.repetition_penalty,
        length_penalty=config.length_penalty,
        pad_token_id=model.config.pad_token_id,
        eos_token_id=model.config.eos_token_id,
        decoder_start_token_id=model.config.decoder_start_token_id,
    )


def train_generator(
    train_file: str | Path,
    model_dir: str | Path,
    config: GeneratorTrainingConfig = GeneratorTrainingConfig(),
    from_scratch: bool = False,
) -> dict:
    """Fine-tune on a formatted training file; returns the training log."""
    if config.optimizer not in _OPTIMIZERS:
        raise ConfigError(f"unknown optimizer {config.optimizer!r}")
    records = load_training_records(train_file)
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(config.seed)
    if from_scratch:
        texts = [r["input"] for r in records] + [r["target"] for r in records]
        tokenizer = seq2seq_tokenizer(texts)
        model = _tiny_seq2seq(tokenizer)
    else:
        tokenizer = AutoTokenizer.from_pretrained(config.model_name)
        model = AutoModelForSeq2SeqLM.from_pretrained(config.model_name)

    dataset = _encode_training(records, tokenizer, config)
    loader = DataLoader(
        dataset, batch_size=config.batch_size, shuffle=True,
        generator=torch.Generator().manual_seed(config.seed))
    optimizer = _OPTIMIZERS[config.optimizer](
        model.parameters(), lr=config.learning_rate)

    model.train()
    steps = []
    for epoch in range(config.epochs):
        for input_ids, attention_mask, labels in loader:
            optimizer.zero_grad()
            loss = model(input_ids=input_ids, attention_mask=attention_mask,
                         labels=labels).loss
            loss.backward()
            optimizer.step()
            steps.append({"step": len(steps), "epoch": epoch,
                          "loss": float(loss.detach())})

    log = {
        "examples": len(records),
        "steps": steps,
        "first_loss": steps[0]["loss"],
        "last_loss": steps[-1]["loss"],
    }
    model.generation_config = _generation_config(config, model)
    model.save_pretrained(model_dir)
    tokenizer.save_pretrained(model_dir)
    config.save(model_dir / TRAINING_CONFIG_NAME)
    (model_dir / TRAINING_LOG_NAME).write_text(
        json.dumps(log, indent=2) + "\n", encoding="utf-8")
    return log


def _decode(model, tokenizer, texts: list[str], config: GeneratorTrainingConfig,
            num_beams: int) -> list[str]:
    generation_config = _generation_config(config, model)
    generation_config.num_beams = num_beams
    suppress = LogitsProcessorList([_SuppressTokens(mask_token_ids(tokenizer))])
    out: list[str] = []
    for start in range(0, len(texts), _INFERENCE_BATCH):
        chunk = texts[start:start + _INFERENCE_BATCH]
        enc = tokenizer(chunk, padding=True, truncation=True,
                        max_length=config.max_source_length, return_tensors="pt")
        with torch.no_grad():
            generated = model.generate(
                input_ids=enc["input_ids"],
                attention_mask=enc["attention_mask"],
                generation_config=generation_config,
                logits_processor=suppress,
            )
        out.extend(t.strip() for t in
                   tokenizer.batch_decode(generated, skip_special_tokens=True))
    return out


def _invalid_reason(text: str) -> str | None:
    if not text.strip():
        return "empty_generation"
    from .text import MASK_RE
    if MASK_RE.search(text):
        return "residual_mask"
    return None


def generate(
    model_dir: str | Path,
    batch_file: str | Path,
    out_file: str | Path,
    shards: int = 1,
    rejects_file: str | Path | None = None,
) -> dict:
    """Decode a generation batch into the output contract.

    Records whose decoded text fails validation are retried once with a
    wider beam, then dropped into the rejects report. Sharding only
    changes how the batch is chunked; outputs stay in input order.
    """
    if shards < 1:
        raise ConfigError(f"shards must be at least 1, got {shards}")
    batch = load_batch_records(batch_file)
    out_file = Path(out_file)
    out_file.parent.mkdir(parents=True, exist_ok=True)
    rejects_path = (Path(rejects_file) if rejects_file
                    else out_file.parent / "generation_rejects.jsonl")

    model_dir = Path(model_dir)
    tokenizer = AutoTokenizer.from_pretrained(model_dir)
    model = AutoModelForSeq2SeqLM.from_pretrained(model_dir)
    model.eval()
    config_path = model_dir / TRAINING_CONFIG_NAME
    config = (GeneratorTrainingConfig.load(config_path)
              if config_path.exists() else GeneratorTrainingConfig())

    texts: list[str] = []
    if batch:
        per_shard = -(-len(batch) // shards)
        for start in range(0, len(batch), per_shard):
            chunk = [rec["input"] for _ln, rec in batch[start:start + per_shard]]
            texts.extend(_decode(model, tokenizer, chunk, config, config.beam_size))

    retry_idx = [i for i, t in enumerate(texts) if _invalid_reason(t)]
    retried = 0
    if retry_idx:
        retry_texts = _decode(model, tokenizer,
                              [batch[i][1]["input"] for i in retry_idx],
                              config, config.beam_size + 1)
        for i, text in zip(retry_idx, retry_texts):
            texts[i] = text
        retried = len(retry_idx)

    accepted, rejects = [], []
    for (line_no, rec), text in zip(batch, texts):
        reason = _invalid_reason(text)
        if reason:
            rejects.append({"line": line_no, "reason": reason})
            continue
        accepted.append({
            "doc_id": rec["doc_id"],
            "summary_index": rec["summary_index"],
            "code": rec["code"],
            "generated": text,
        })
    write_jsonl(out_file, accepted)
    write_jsonl(rejects_path, rejects)
    return {
        "records": len(batch),
        "generated": len(accepted),
        "retried": retried,
        "dropped": len(rejects),
    }
