"""Train sentence-pair consistency classifiers and score evaluation sets.

Training and evaluation files use the pipeline's example contract:

    {"pair_id", "premise", "hypothesis", "label", "provenance"}

with labels drawn from exactly ``entailment`` / ``non-entailment``.
Predictions come out in the evaluation contract, one file per seed and
eval set:

    {"example_id", "score"}                    (default)
    {"example_id", "scores": [[...], ...]}     (sentence-matrix mode)

``score`` is the probability of ``entailment``. In matrix mode row j is
a hypothesis sentence and column i a premise sentence. ``example_id``
is ``{pair_id}#{provenance}`` so ids survive reordering or ablation.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch
from torch.utils.data import DataLoader, TensorDataset
from transformers import (
    AutoModelForSequenceClassification,
    AutoTokenizer,
    BertConfig,
    BertForSequenceClassification,
)

from .configs import ClassifierTrainingConfig
from .errors import ContractError
from .text import pair_tokenizer, read_jsonl, split_sentences, write_jsonl

LABELS = ("entailment", "non-entailment")
_LABEL_IDS = {"non-entailment": 0, "entailment": 1}

_INFERENCE_BATCH = 32


def example_id(rec: dict) -> str:
    return f"{rec['pair_id']}#{rec['provenance']}"


def load_example_records(path: str | Path, labeled: bool) -> list[dict]:
    """Read an example file; training (labeled) requires a known label."""
    fields = ("pair_id", "premise", "hypothesis", "provenance")
    records, bad, bad_labels = [], [], []
    for line_no, rec in read_jsonl(path):
        if not all(isinstance(rec.get(f), str) for f in fields):
            bad.append(line_no)
            continue
        label = rec.get("label")
        if labeled and label not in _LABEL_IDS:
            bad_labels.append((line_no, label))
            continue
        records.append(rec)
    if bad_labels:
        listing = ", ".join(f"{n} ({lab!r})" for n, lab in bad_labels)
        raise ContractError(f"{path}: label vocabulary mismatch on lines {listing}; "
                            f"expected one of {LABELS}")
    if bad:
        raise ContractError(f"{path}: invalid example records on lines "
                            + ", ".join(str(n) for n in bad))
    if not records:
        raise ContractError(f"{path}: no example records")
    return records


def _tiny_pair_model(tokenizer, max_tokens: int) -> BertForSequenceClassification:
    config = BertConfig(
        vocab_size=len(tokenizer),
        hidden_size=64,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=128,
        max_position_embeddings=max_tokens,
        type_vocab_size=2,
        num_labels=2,
        pad_token_id=tokenizer.pad_token_id,
    )
    return BertForSequenceClassification(config)


def _encode_pairs(records, tokenizer, max_tokens: int):
    return tokenizer(
        [r["premise"] for r in records],
        [r["hypothesis"] for r in records],
        padding=True, truncation=True, max_length=max_tokens,
        return_tensors="pt")


def _train_one(records, tokenizer, model, config: ClassifierTrainingConfig,
               seed: int) -> dict:
    enc = _encode_pairs(records, tokenizer, config.max_input_tokens)
    labels = torch.tensor([_LABEL_IDS[r["label"]] for r in records])
    dataset = TensorDataset(enc["input_ids"], enc["token_type_ids"],
                            enc["attention_mask"], labels)
    loader = DataLoader(dataset, batch_size=config.batch_size, shuffle=True,
                        generator=torch.Generator().manual_seed(seed))
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)

    model.train()
    steps = []
    for epoch in range(config.epochs):
        for input_ids, token_type_ids, attention_mask, batch_labels in loader:
            optimizer.zero_grad()
            loss = model(input_ids=input_ids, token_type_ids=token_type_ids,
                         attention_mask=attention_mask, labels=batch_labels).loss
            loss.backward()
            optimizer.step()
            steps.append({"step": len(steps), "epoch": epoch,
                          "loss": float(loss.detach())})
    return {"examples": len(records), "steps": steps,
            "first_loss": steps[0]["loss"], "last_loss": steps[-1]["loss"]}


def _entailment_probs(pairs: list[tuple[str, str]], tokenizer, model,
                      max_tokens: int) -> list[float]:
    probs: list[float] = []
    model.eval()
    for start in range(0, len(pairs), _INFERENCE_BATCH):
        chunk = pairs[start:start + _INFERENCE_BATCH]
        enc = tokenizer([p for p, _h in chunk], [h for _p, h in chunk],
                        padding=True, truncation=True, max_length=max_tokens,
                        return_tensors="pt")
        with torch.no_grad():
            logits = model(**enc).logits
        probs.extend(torch.softmax(logits, dim=-1)[:, 1].tolist())
    return probs


def _score_file(eval_path: Path, tokenizer, model,
                config: ClassifierTrainingConfig, sentence_matrix: bool) -> list[dict]:
    records = load_example_records(eval_path, labeled=False)
    if not sentence_matrix:
        pairs = [(r["premise"], r["hypothesis"]) for r in records]
        probs = _entailment_probs(pairs, tokenizer, model, config.max_input_tokens)
        return [{"example_id": example_id(r), "score": p}
                for r, p in zip(records, probs)]

    out = []
    flat: list[tuple[str, str]] = []
    shapes = []
    for rec in records:
        rows = split_sentences(rec["hypothesis"])
        cols = split_sentences(rec["premise"])
        shapes.append((len(rows), len(cols)))
        flat.extend((c, r) for r in rows for c in cols)
    probs = _entailment_probs(flat, tokenizer, model, config.max_input_tokens)
    cursor = 0
    for rec, (m, n) in zip(records, shapes):
        matrix = [probs[cursor + j * n:cursor + (j + 1) * n] for j in range(m)]
        cursor += m * n
        out.append({"example_id": example_id(rec), "scores": matrix})
    return out


def train_and_score_classifier(
    train_file: str | Path,
    eval_files: list[str | Path],
    out_dir: str | Path,
    config: ClassifierTrainingConfig = ClassifierTrainingConfig(),
    from_scratch: bool = False,
    sentence_matrix: bool = False,
    seeds: list[int] | None = None,
) -> dict:
    """Train one classifier per seed and score every eval file with each.

    Writes ``{eval stem}.seed{seed}.jsonl`` prediction files plus a
    ``training_log.seed{seed}.json`` per run. A premise may be the empty
    string, so hypothesis-only controls score like any other file.
    """
    train_records = load_example_records(train_file, labeled=True)
    eval_paths = [Path(p) for p in eval_files]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run_seeds = list(seeds) if seeds is not None else list(config.seeds)

    texts = ([r["premise"] for r in train_records]
             + [r["hypothesis"] for r in train_records])
    summary = {"seeds": run_seeds, "train_examples": len(train_records),
               "prediction_files": [], "losses": {}}
    for seed in run_seeds:
        torch.manual_seed(seed)
        if from_scratch:
            tokenizer = pair_tokenizer(texts)
            model = _tiny_pair_model(tokenizer, config.max_input_tokens)
        else:
            tokenizer = AutoTokenizer.from_pretrained(config.model_name)
            model = AutoModelForSequenceClassification.from_pretrained(
                config.model_name, num_labels=2)
        log = _train_one(train_records, tokenizer, model, config, seed)
        (out_dir / f"training_log.seed{seed}.json").write_text(
            json.dumps(log, indent=2) + "\n", encoding="utf-8")
        summary["losses"][str(seed)] = {"first": log["first_loss"],
                                        "last": log["last_loss"]}
        for eval_path in eval_paths:
            predictions = _score_file(eval_path, tokenizer, model, config,
                                      sentence_matrix)
            pred_path = out_dir / f"{eval_path.stem}.seed{seed}.jsonl"
            write_jsonl(pred_path, predictions)
            summary["prediction_files"].append(str(pred_path))
    return summary
