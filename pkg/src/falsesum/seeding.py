"""Keyed deterministic randomness.

Every random decision in the pipeline draws from a stream derived from
(seed, doc_id, summary_index, stage_tag). Streams are independent of
processing order, which is what makes parallel runs byte-identical to
serial ones.
"""

from __future__ import annotations

import hashlib

import numpy as np

_SEP = b"\x1f"  # unit separator; never appears in ids we generate


def _digest(parts: tuple) -> bytes:
    key = _SEP.join(str(p).encode("utf-8") for p in parts)
    return hashlib.blake2b(key, digest_size=16).digest()


def derive_rng(seed: int, doc_id: str = "", summary_index: int = 0,
               stage_tag: str = "") -> np.random.Generator:
    """Return an independent Generator for one (unit, stage) combination."""
    digest = _digest((doc_id, summary_index, stage_tag))
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**63 - 1), *words]))


def derive_uniform(seed: int, *parts) -> float:
    """One keyed uniform draw in [0, 1) without building a Generator.

    Used for per-record coins (train/test split, contrastive keep-one)
    where the decision must not depend on record order.
    """
    digest = hashlib.blake2b(
        _SEP.join(str(p).encode("utf-8") for p in (seed, *parts)),
        digest_size=8,
    ).digest()
    return int.from_bytes(digest, "little") / 2**64
