"""Evaluation utilities for factual-consistency classifiers.

Covers balanced accuracy over binary consistency labels, Precision@1
over ranked summary candidates, max-entailment aggregation of
sentence-pair score matrices, greedy extractive fragment statistics, and
quantile partitioning of a test set by document-summary overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import median
from typing import Mapping, Sequence

from .errors import UsageError

CONSISTENT = "consistent"
INCONSISTENT = "inconsistent"

_GOLD_ALIASES = {
    "consistent": CONSISTENT,
    "entailment": CONSISTENT,
    "inconsistent": INCONSISTENT,
    "non-entailment": INCONSISTENT,
}


def normalize_gold(value: str) -> str:
    if value not in _GOLD_ALIASES:
        raise UsageError(f"unknown gold label {value!r}")
    return _GOLD_ALIASES[value]


@dataclass(frozen=True)
class EvalRecord:
    example_id: str
    gold: str  # consistent | inconsistent
    score: float  # probability of consistent, in [0, 1]

    def predicted(self, threshold: float = 0.5) -> str:
        return CONSISTENT if self.score >= threshold else INCONSISTENT


@dataclass(frozen=True)
class RankCandidate:
    summary_id: int
    consistent: bool
    score: float


@dataclass(frozen=True)
class RankInstance:
    instance_id: str
    candidates: tuple[RankCandidate, ...]


@dataclass(frozen=True)
class ScoreMatrix:
    """Row j = summary sentence, column i = document sentence."""

    scores: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if not self.scores:
            raise UsageError("score matrix must have at least one row")
        width = len(self.scores[0])
        if width == 0:
            raise UsageError("score matrix rows must be non-empty")
        for row in self.scores:
            if len(row) != width:
                raise UsageError("score matrix rows must all have the same length")

    @classmethod
    def from_lists(cls, rows: Sequence[Sequence[float]]) -> "ScoreMatrix":
        return cls(tuple(tuple(float(x) for x in row) for row in rows))


def balanced_accuracy(records: Sequence[EvalRecord], threshold: float = 0.5) -> float:
    """Mean of per-class recalls; undefined when only one class is present."""
    if not records:
        raise UsageError("balanced accuracy needs at least one record")
    hits = {CONSISTENT: 0, INCONSISTENT: 0}
    totals = {CONSISTENT: 0, INCONSISTENT: 0}
    for rec in records:
        gold = normalize_gold(rec.gold)
        totals[gold] += 1
        if rec.predicted(threshold) == gold:
            hits[gold] += 1
    if totals[CONSISTENT] == 0 or totals[INCONSISTENT] == 0:
        raise UsageError("balanced accuracy undefined: only one gold class present")
    return math.fsum(
        (hits[cls] / totals[cls] for cls in (CONSISTENT, INCONSISTENT))
    ) / 2.0


def precision_at_1(instances: Sequence[RankInstance]) -> float:
    """Fraction of instances whose top-scored candidate is consistent.

    Score ties break toward the lowest summary_id.
    """
    if not instances:
        raise UsageError("precision@1 needs at least one instance")
    hits = 0
    for instance in instances:
        if not instance.candidates:
            raise UsageError(f"instance {instance.instance_id!r} has no candidates")
        top = min(instance.candidates, key=lambda c: (-c.score, c.summary_id))
        hits += 1 if top.consistent else 0
    return hits / len(instances)


def aggregate_consistency(matrix: ScoreMatrix | Sequence[Sequence[float]]) -> float:
    """sigma(D, S) = (1/m) * sum_j max_i scores[j][i]."""
    if not isinstance(matrix, ScoreMatrix):
        matrix = ScoreMatrix.from_lists(matrix)
    return math.fsum(max(row) for row in matrix.scores) / len(matrix.scores)


def extractive_fragments(doc_tokens: Sequence[str],
                         summary_tokens: Sequence[str]) -> list[list[str]]:
    """Greedy shared-fragment decomposition of the summary.

    Left-to-right over the summary: take the longest match starting at
    the current position against any document position (leftmost document
    occurrence on ties), emit it, and continue past it; unmatched tokens
    advance by one.
    """
    doc = list(doc_tokens)
    summary = list(summary_tokens)
    fragments: list[list[str]] = []
    i = 0
    while i < len(summary):
        best = 0
        for j in range(len(doc)):
            if doc[j] != summary[i]:
                continue
            length = 1
            while (i + length < len(summary) and j + length < len(doc)
                   and summary[i + length] == doc[j + length]):
                length += 1
            if length > best:
                best = length
        if best:
            fragments.append(summary[i:i + best])
            i += best
        else:
            i += 1
    return fragments


def overlap_score(doc_text: str, summary_text: str) -> tuple[float, float, float]:
    """(density, normalized_coverage, overlap) on lowercased whitespace tokens.

    density = (1/|S|) * sum |f|; normalized_coverage = (1/|S|^2) * sum |f|^2;
    overlap is their product.
    """
    doc_tokens = doc_text.lower().split()
    summary_tokens = summary_text.lower().split()
    if not summary_tokens:
        raise UsageError("overlap undefined for an empty summary")
    fragments = extractive_fragments(doc_tokens, summary_tokens)
    n = len(summary_tokens)
    density = math.fsum(len(f) for f in fragments) / n
    normalized_coverage = math.fsum(len(f) ** 2 for f in fragments) / n**2
    return density, normalized_coverage, density * normalized_coverage


def partition_by_overlap(
    records: Sequence[dict],
    k: int = 5,
    predictions: Mapping[str, Mapping[str, float]] | None = None,
    threshold: float = 0.5,
) -> dict:
    """Quantile-partition gold records by overlap; k bins, remainder low.

    records: {"example_id", "gold", "premise", "hypothesis"} dicts.
    predictions: name -> {example_id: score}; each prediction set gets a
    balanced accuracy per bin (null when a bin is single-class).
    """
    if k < 1:
        raise UsageError(f"k must be at least 1, got {k}")
    if len(records) < k:
        raise UsageError(f"cannot make {k} bins from {len(records)} records")
    predictions = predictions or {}

    scored = []
    for rec in records:
        _d, _c, overlap = overlap_score(rec["premise"], rec["hypothesis"])
        scored.append((overlap, rec))
    scored.sort(key=lambda pair: pair[0])  # stable: ties keep input order

    base, remainder = divmod(len(scored), k)
    sizes = [base + 1 if b < remainder else base for b in range(k)]

    bins = []
    cursor = 0
    for size in sizes:
        chunk = scored[cursor:cursor + size]
        cursor += size
        entry: dict = {
            "size": size,
            "median_overlap": median(overlap for overlap, _rec in chunk),
            "metrics": {},
        }
        for name, scores in predictions.items():
            eval_records = []
            for _overlap, rec in chunk:
                if rec["example_id"] not in scores:
                    raise UsageError(
                        f"prediction set {name!r} is missing {rec['example_id']!r}"
                    )
                eval_records.append(
                    EvalRecord(rec["example_id"], normalize_gold(rec["gold"]),
                               scores[rec["example_id"]])
                )
            try:
                value = balanced_accuracy(eval_records, threshold)
            except UsageError:
                value = None  # single-class bin
            entry["metrics"][name] = value
        bins.append(entry)
    return {"k": k, "total": len(scored), "bins": bins}


def mean_over_seeds(reports: Sequence[Mapping[str, float]]) -> dict:
    """Per-metric mean with min and max across per-seed reports."""
    if not reports:
        raise UsageError("need at least one report")
    keys = set(reports[0])
    for i, report in enumerate(reports[1:], start=2):
        if set(report) != keys:
            raise UsageError(
                f"report {i} metric keys {sorted(report)} do not match {sorted(keys)}"
            )
    out = {}
    for key in sorted(keys):
        values = [float(r[key]) for r in reports]
        out[key] = {
            "mean": math.fsum(values) / len(values),
            "min": min(values),
            "max": max(values),
        }
    return out
