"""Independent reference implementations used to check the real ones.

Everything here is deliberately written with a different mechanism than
the library code (head-chain walks instead of child maps, a DP table
instead of a greedy scan) so agreement actually means something.
"""

from __future__ import annotations

import numpy as np

from falsesum.conllu import Sentence, Token


def reaches(sentence: Sentence, token_index: int, ancestor: int) -> bool:
    """True when walking token_index's head chain passes through ancestor."""
    cur = token_index
    while cur != 0:
        if cur == ancestor:
            return True
        cur = sentence.token(cur).head
    return False


def subtree_by_chains(sentence: Sentence, root_index: int) -> set[int]:
    """Subtree membership computed by walking every token's head chain."""
    return {tok.index for tok in sentence.tokens if reaches(sentence, tok.index, root_index)}


def contiguous_run_around(indices: set[int], anchor: int) -> tuple[int, int]:
    """Largest contiguous stretch of indices containing anchor."""
    lo = anchor
    while lo - 1 in indices:
        lo -= 1
    hi = anchor
    while hi + 1 in indices:
        hi += 1
    return lo, hi


def dp_fragments(doc: list[str], summary: list[str]) -> list[list[str]]:
    """Greedy shared fragments, but driven by a full match-length table.

    table[i][j] = length of the common run starting at summary[i], doc[j].
    """
    n, m = len(summary), len(doc)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if summary[i] == doc[j]:
                table[i][j] = 1 + table[i + 1][j + 1]
    fragments = []
    i = 0
    while i < n:
        best = max(table[i][:m], default=0)
        if best > 0:
            fragments.append(summary[i:i + best])
            i += best
        else:
            i += 1
    return fragments


_RANDOM_UPOS = ["VERB", "NOUN", "PROPN", "ADJ", "ADV", "ADP", "DET", "AUX", "PRON", "NUM"]
_RANDOM_RELS = [
    "root", "nsubj", "nsubj:pass", "obj", "iobj", "obl", "obl:tmod", "nmod",
    "case", "det", "amod", "advmod", "aux", "cop", "mark", "xcomp", "ccomp",
    "conj", "cc", "punct", "compound", "compound:prt", "acl", "advcl",
]


def random_sentence(rng: np.random.Generator, n_tokens: int | None = None) -> Sentence:
    """A random but valid dependency tree over word-like tokens."""
    n = int(n_tokens if n_tokens is not None else rng.integers(2, 13))
    order = [int(i) for i in rng.permutation(n)]
    root = order[0] + 1
    heads = {root: 0}
    attached = [root]
    for pos in order[1:]:
        idx = pos + 1
        heads[idx] = attached[int(rng.integers(0, len(attached)))]
        attached.append(idx)
    tokens = []
    for i in range(1, n + 1):
        rel = "root" if heads[i] == 0 else _RANDOM_RELS[int(rng.integers(1, len(_RANDOM_RELS)))]
        tokens.append(
            Token(
                index=i,
                form=f"w{i}",
                lemma=f"w{i}",
                upos=_RANDOM_UPOS[int(rng.integers(0, len(_RANDOM_UPOS)))],
                head=heads[i],
                deprel=rel,
            )
        )
    return Sentence(tokens=tuple(tokens), sent_index=0)


class StubRng:
    """Duck-typed stand-in feeding preset values to integers()/random()."""

    def __init__(self, ints=(), floats=()):
        self._ints = list(ints)
        self._floats = list(floats)

    def integers(self, low, high=None, size=None):
        value = self._ints.pop(0)
        return value

    def random(self):
        return self._floats.pop(0)
