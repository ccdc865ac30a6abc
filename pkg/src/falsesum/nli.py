"""Assemble document-level NLI datasets from units and generator output.

Every matched unit yields exactly two examples sharing a pair_id: the
gold summary sentence as an entailment and the generated perturbation as
a non-entailment. Record schema:

    {"pair_id", "premise", "hypothesis", "label", "provenance"}

labels: entailment | non-entailment
provenance: gold | generated-intrinsic | generated-extrinsic | base
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .bridge import GenerationRecord
from .corpus import DocSummaryUnit
from .errors import ContractViolation, UsageError
from .jsonl import read_jsonl, write_jsonl
from .seeding import derive_rng, derive_uniform

ENTAILMENT = "entailment"
NON_ENTAILMENT = "non-entailment"
LABELS = (ENTAILMENT, NON_ENTAILMENT)

# 3-class sentence-level labels collapse to the binary scheme.
BASE_LABEL_MAP = {
    "entailment": ENTAILMENT,
    "neutral": NON_ENTAILMENT,
    "contradiction": NON_ENTAILMENT,
}

VARIANTS = ("contrastive", "intrinsic", "extrinsic")


@dataclass(frozen=True)
class NliExample:
    pair_id: str
    premise: str
    hypothesis: str
    label: str
    provenance: str

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "premise": self.premise,
            "hypothesis": self.hypothesis,
            "label": self.label,
            "provenance": self.provenance,
        }


def example_from_json(rec: dict, where: str = "") -> NliExample:
    for field in ("pair_id", "premise", "hypothesis", "label", "provenance"):
        if field not in rec:
            raise ContractViolation(f"{where}: missing field {field!r}")
    if rec["label"] not in LABELS:
        raise ContractViolation(f"{where}: unknown label {rec['label']!r}")
    return NliExample(
        pair_id=rec["pair_id"],
        premise=rec["premise"],
        hypothesis=rec["hypothesis"],
        label=rec["label"],
        provenance=rec["provenance"],
    )


def emit_nli(units: Sequence[DocSummaryUnit],
             generations: Iterable[GenerationRecord]) -> list[NliExample]:
    """Pair units with generations; two examples per matched unit.

    Units without a generation are dropped; a generation without a unit
    is an error listing the orphan ids.
    """
    by_key: dict[tuple[str, int], GenerationRecord] = {}
    for gen in generations:
        key = (gen.doc_id, gen.summary_index)
        if key in by_key:
            raise ContractViolation(f"duplicate generation for {key[0]}:{key[1]}")
        by_key[key] = gen

    unit_keys = {(u.doc_id, u.summary_index) for u in units}
    orphans = sorted(k for k in by_key if k not in unit_keys)
    if orphans:
        listing = ", ".join(f"{d}:{i}" for d, i in orphans)
        raise ContractViolation(f"generations with no matching unit: {listing}")

    out: list[NliExample] = []
    for unit in units:
        gen = by_key.get((unit.doc_id, unit.summary_index))
        if gen is None:
            continue
        pair_id = f"{unit.doc_id}:{unit.summary_index}"
        premise = unit.document.raw_text
        out.append(
            NliExample(pair_id, premise, unit.summary.text(), ENTAILMENT, "gold")
        )
        out.append(
            NliExample(pair_id, premise, gen.generated, NON_ENTAILMENT,
                       f"generated-{gen.code}")
        )
    return out


def ablate(examples: Sequence[NliExample], variant: str, seed: int) -> list[NliExample]:
    """Dataset ablations.

    -contrastive: keep one example per pair_id, uniformly at random.
    -intrinsic:   drop negatives with provenance generated-intrinsic.
    -extrinsic:   drop negatives with provenance generated-extrinsic.
    """
    name = variant.lstrip("-")
    if name not in VARIANTS:
        raise UsageError(f"unknown ablation variant {variant!r}; pick one of "
                         + ", ".join("-" + v for v in VARIANTS))
    if name == "intrinsic":
        return [e for e in examples if e.provenance != "generated-intrinsic"]
    if name == "extrinsic":
        return [e for e in examples if e.provenance != "generated-extrinsic"]

    by_pair: dict[str, list[NliExample]] = {}
    order: list[str] = []
    for example in examples:
        if example.pair_id not in by_pair:
            order.append(example.pair_id)
        by_pair.setdefault(example.pair_id, []).append(example)

    kept: list[NliExample] = []
    for pair_id in order:
        group = by_pair[pair_id]
        if len(group) == 1:
            kept.append(group[0])
            continue
        positives = [e for e in group if e.label == ENTAILMENT]
        negatives = [e for e in group if e.label == NON_ENTAILMENT]
        coin = derive_uniform(seed, pair_id, "contrastive")
        pick = positives if (coin < 0.5 and positives) else negatives
        kept.append(pick[0])
    return kept


def sample_examples(examples: Sequence[NliExample], n: int, seed: int) -> list[NliExample]:
    """Uniform sample without replacement, original order re-imposed."""
    if n > len(examples):
        raise UsageError(f"cannot sample {n} examples from {len(examples)}")
    rng = derive_rng(seed, "", 0, "sample")
    picks = rng.choice(len(examples), size=n, replace=False)
    return [examples[i] for i in sorted(int(p) for p in picks)]


def hypothesis_only(examples: Sequence[NliExample]) -> list[NliExample]:
    """Probe variant: blank premises, everything else untouched."""
    return [replace(e, premise="") for e in examples]


def merge_for_augmentation(base_path: str | Path, extra_path: str | Path,
                           seed: int, out_path: str | Path) -> int:
    """Map a 3-class base dataset to binary labels, concatenate with ours,
    shuffle with the seed, and write the result."""
    merged: list[NliExample] = []
    for line_no, rec in read_jsonl(base_path):
        for field in ("premise", "hypothesis", "label"):
            if field not in rec:
                raise ContractViolation(
                    f"{base_path}: line {line_no}: missing field {field!r}"
                )
        label = rec["label"]
        if label not in BASE_LABEL_MAP:
            raise ContractViolation(
                f"{base_path}: line {line_no}: unknown label {label!r}"
            )
        merged.append(
            NliExample(
                pair_id=rec.get("pair_id", f"base-{line_no}"),
                premise=rec["premise"],
                hypothesis=rec["hypothesis"],
                label=BASE_LABEL_MAP[label],
                provenance="base",
            )
        )
    for line_no, rec in read_jsonl(extra_path):
        merged.append(example_from_json(rec, where=f"{extra_path}: line {line_no}"))

    rng = derive_rng(seed, "", 0, "merge")
    order = rng.permutation(len(merged))
    return write_jsonl(out_path, (merged[int(i)].to_json() for i in order))
