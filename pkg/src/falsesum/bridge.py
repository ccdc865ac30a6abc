"""File-level bridge between the formatter and any seq2seq generator.

The generator is external; only two JSONL contracts matter:

    batch (pipeline -> generator):
        {"doc_id": str, "summary_index": int, "code": str, "input": str}
    output (generator -> pipeline):
        {"doc_id": str, "summary_index": int, "code": str, "generated": str}

The mock generator included here fills each mask token with a span drawn
from the input's own lists, which is enough to exercise every downstream
stage without a neural model.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ContractViolation
from .formatting import CODES, MASK_RE, FormattedExample, parse_input
from .jsonl import read_jsonl, write_jsonl


@dataclass(frozen=True)
class GenerationRecord:
    doc_id: str
    summary_index: int
    code: str
    generated: str

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "summary_index": self.summary_index,
            "code": self.code,
            "generated": self.generated,
        }


def _as_record(example) -> dict:
    if isinstance(example, FormattedExample):
        return example.to_json()
    return example


def write_generation_batch(examples: Iterable, path: str | Path) -> int:
    """Write test-mode examples as a generation batch; train mode is an error."""
    records = []
    for example in examples:
        rec = _as_record(example)
        if rec.get("mode") != "test":
            raise ContractViolation(
                f"generation batches are test-only, got mode {rec.get('mode')!r} "
                f"for {rec.get('doc_id')!r}"
            )
        records.append(
            {
                "doc_id": rec["doc_id"],
                "summary_index": rec["summary_index"],
                "code": rec["code"],
                "input": rec["input"],
            }
        )
    return write_jsonl(path, records)


def read_generation_output(
    path: str | Path,
    known_ids: set[tuple[str, int]] | None = None,
) -> tuple[list[GenerationRecord], list[dict]]:
    """Read generator output, rejecting malformed records into a report.

    Returns (accepted, rejects); each reject is {"line", "reason"}.
    When known_ids is given, records whose (doc_id, summary_index) is not
    in it are rejected as unknown_id.
    """
    accepted: list[GenerationRecord] = []
    rejects: list[dict] = []
    for line_no, rec in read_jsonl(path):
        reason = None
        for field, kind in (
            ("doc_id", str),
            ("summary_index", int),
            ("code", str),
            ("generated", str),
        ):
            if not isinstance(rec.get(field), kind):
                reason = f"missing_field:{field}"
                break
        if reason is None and rec["code"] not in CODES:
            reason = f"unknown_code:{rec['code']}"
        if reason is None and not rec["generated"].strip():
            reason = "empty_generation"
        if reason is None and MASK_RE.search(rec["generated"]):
            reason = "residual_mask"
        if reason is None and known_ids is not None:
            if (rec["doc_id"], rec["summary_index"]) not in known_ids:
                reason = "unknown_id"
        if reason is not None:
            rejects.append({"line": line_no, "reason": reason})
            continue
        accepted.append(
            GenerationRecord(
                doc_id=rec["doc_id"],
                summary_index=rec["summary_index"],
                code=rec["code"],
                generated=rec["generated"],
            )
        )
    return accepted, rejects


def _fill_masks(input_text: str, rng: np.random.Generator) -> str:
    predicates, arguments, _code, masked = parse_input(input_text)
    mask_ids = [int(m) for m in MASK_RE.findall(masked)]
    if not mask_ids:
        return masked

    fills: dict[int, str] = {}
    if 0 in mask_ids:
        pool = predicates or arguments
        if not pool:
            raise ContractViolation("cannot fill <span_0>: both lists are empty")
        fills[0] = pool[int(rng.integers(0, len(pool)))]
    arg_ids = sorted(i for i in mask_ids if i > 0)
    if arg_ids:
        pool = arguments or predicates
        if not pool:
            raise ContractViolation("cannot fill argument masks: both lists are empty")
        if len(pool) >= len(arg_ids):
            picks = rng.choice(len(pool), size=len(arg_ids), replace=False)
        else:
            picks = rng.integers(0, len(pool), size=len(arg_ids))
        for mask_id, pick in zip(arg_ids, picks):
            fills[mask_id] = pool[int(pick)]

    return MASK_RE.sub(lambda m: fills[int(m.group(1))], masked)


def mock_generate(example, rng: np.random.Generator) -> GenerationRecord:
    """Produce a perturbed summary by splicing input spans into the masks."""
    rec = _as_record(example)
    return GenerationRecord(
        doc_id=rec["doc_id"],
        summary_index=rec["summary_index"],
        code=rec["code"],
        generated=_fill_masks(rec["input"], rng),
    )
