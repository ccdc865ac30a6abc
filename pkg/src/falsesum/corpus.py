"""Pair documents, summaries, and dependency parses into work units.

File contracts:
  documents.jsonl   {"doc_id": str, "text": str}
  summaries.jsonl   {"doc_id": str, "sentences": [str, ...]}
  parses/<doc_id>.conllu   document sentences, then the comment line
                           ``# falsesum-summary-begin``, then one parsed
                           sentence per summary sentence.

Units that cannot be built are skipped, never fatal; each skip produces a
{"doc_id", "reason"} report entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .conllu import Sentence, parse_conllu
from .errors import ContractViolation, PipelineError
from .jsonl import read_jsonl

SUMMARY_MARKER = "# falsesum-summary-begin"


@dataclass(frozen=True)
class ParsedDocument:
    doc_id: str
    sentences: tuple[Sentence, ...]
    raw_text: str


@dataclass(frozen=True)
class DocSummaryUnit:
    doc_id: str
    document: ParsedDocument
    summary: Sentence  # one summary sentence; its sent_index is the position in the summary
    summary_index: int


@dataclass(frozen=True)
class SkipEntry:
    doc_id: str
    reason: str

    def to_json(self) -> dict:
        return {"doc_id": self.doc_id, "reason": self.reason}


def _load_documents(path: str | Path) -> dict[str, str]:
    docs: dict[str, str] = {}
    for line_no, rec in read_jsonl(path):
        if "doc_id" not in rec or "text" not in rec:
            raise ContractViolation(f"{path}: line {line_no}: need doc_id and text")
        if rec["doc_id"] in docs:
            raise ContractViolation(f"{path}: line {line_no}: duplicate doc_id {rec['doc_id']!r}")
        docs[rec["doc_id"]] = rec["text"]
    return docs


def _load_summaries(path: str | Path) -> dict[str, list[str]]:
    summaries: dict[str, list[str]] = {}
    for line_no, rec in read_jsonl(path):
        if "doc_id" not in rec or "sentences" not in rec:
            raise ContractViolation(f"{path}: line {line_no}: need doc_id and sentences")
        if not isinstance(rec["sentences"], list):
            raise ContractViolation(f"{path}: line {line_no}: sentences must be a list")
        if rec["doc_id"] in summaries:
            raise ContractViolation(f"{path}: line {line_no}: duplicate doc_id {rec['doc_id']!r}")
        summaries[rec["doc_id"]] = [str(s) for s in rec["sentences"]]
    return summaries


def split_parse_file(text: str) -> tuple[str, str]:
    """Split a parse file at the summary marker line."""
    lines = text.split("\n")
    for i, line in enumerate(lines):
        if line.strip() == SUMMARY_MARKER:
            return "\n".join(lines[:i]), "\n".join(lines[i + 1:])
    raise ContractViolation(f"missing {SUMMARY_MARKER!r} line")


def load_corpus(
    documents_path: str | Path,
    summaries_path: str | Path,
    parses_dir: str | Path,
) -> tuple[list[DocSummaryUnit], list[SkipEntry]]:
    """Build one unit per (document, summary sentence) pair.

    Output order is (doc_id, summary_index), independent of filesystem
    order: iteration is over the sorted doc_ids of the summaries file.
    """
    documents = _load_documents(documents_path)
    summaries = _load_summaries(summaries_path)
    parses_dir = Path(parses_dir)

    units: list[DocSummaryUnit] = []
    skips: list[SkipEntry] = []

    for doc_id in sorted(summaries):
        sentences = summaries[doc_id]
        if doc_id not in documents:
            skips.append(SkipEntry(doc_id, "missing_document"))
            continue
        parse_path = parses_dir / f"{doc_id}.conllu"
        if not parse_path.exists():
            skips.append(SkipEntry(doc_id, "missing_parse"))
            continue
        try:
            doc_part, summary_part = split_parse_file(parse_path.read_text(encoding="utf-8"))
            doc_sentences = parse_conllu(doc_part)
            summary_sentences = parse_conllu(summary_part)
        except PipelineError as exc:
            skips.append(SkipEntry(doc_id, f"bad_parse_file:{exc}"))
            continue

        non_empty = [(i, s) for i, s in enumerate(sentences) if s.strip()]
        for i, s in enumerate(sentences):
            if not s.strip():
                skips.append(SkipEntry(doc_id, f"empty_summary_sentence:{i}"))
        if len(summary_sentences) != len(non_empty):
            skips.append(
                SkipEntry(
                    doc_id,
                    f"summary_parse_mismatch:{len(summary_sentences)}!={len(non_empty)}",
                )
            )
            continue

        document = ParsedDocument(
            doc_id=doc_id,
            sentences=tuple(doc_sentences),
            raw_text=documents[doc_id],
        )
        for parse_pos, (summary_index, _text) in enumerate(non_empty):
            units.append(
                DocSummaryUnit(
                    doc_id=doc_id,
                    document=document,
                    summary=summary_sentences[parse_pos],
                    summary_index=summary_index,
                )
            )
    return units, skips
