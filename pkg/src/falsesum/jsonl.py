"""Small JSON Lines helpers used by every stage."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ContractViolation


def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (line_no, record) pairs; blank lines are skipped."""
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ContractViolation(f"{path}: line {line_no}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise ContractViolation(f"{path}: line {line_no}: expected a JSON object")
            yield line_no, obj


def write_jsonl(path: str | Path, records: Iterable[dict]) -> int:
    """Write records one per line; returns the count."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for rec in records:
            handle.write(json.dumps(rec, ensure_ascii=False) + "\n")
            count += 1
    return count
