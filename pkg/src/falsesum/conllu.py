"""Minimal CoNLL-U reader.

Keeps the six columns the pipeline needs (ID, FORM, LEMMA, UPOS, HEAD,
DEPREL) and discards the rest. Multiword-token ranges (``1-2``) and empty
nodes (``1.1``) are skipped; comment lines are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable

from .errors import PipelineError

NUM_FIELDS = 10


class ConlluParseError(PipelineError):
    """Malformed line; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ConlluStructureError(PipelineError):
    """Sentence-level problem (bad head indices, cycles, wrong root count)."""

    def __init__(self, message: str, sentence_ref: str):
        super().__init__(f"sentence {sentence_ref}: {message}")
        self.sentence_ref = sentence_ref


@dataclass(frozen=True)
class Token:
    index: int  # 1-based position within the sentence
    form: str
    lemma: str
    upos: str
    head: int  # 0 means syntactic root
    deprel: str


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    sent_index: int = 0

    def __len__(self) -> int:
        return len(self.tokens)

    def token(self, index: int) -> Token:
        """Fetch by 1-based CoNLL-U index."""
        return self.tokens[index - 1]

    def root(self) -> Token:
        for tok in self.tokens:
            if tok.head == 0:
                return tok
        raise ConlluStructureError("no root token", _sentence_ref(self.tokens))

    def text(self) -> str:
        return " ".join(tok.form for tok in self.tokens)


def _sentence_ref(tokens: Iterable[Token]) -> str:
    head_words = " ".join(tok.form for tok in list(tokens)[:4])
    return f"starting '{head_words}'" if head_words else "(empty)"


def _validate(tokens: list[Token], sent_index: int, first_line: int) -> Sentence:
    ref = f"{sent_index} {_sentence_ref(tokens)}"
    for pos, tok in enumerate(tokens, start=1):
        if tok.index != pos:
            raise ConlluStructureError(
                f"token ids not contiguous (saw {tok.index} at position {pos})", ref
            )
    n = len(tokens)
    roots = [tok for tok in tokens if tok.head == 0]
    if len(roots) != 1:
        raise ConlluStructureError(f"expected exactly 1 root, found {len(roots)}", ref)
    for tok in tokens:
        if tok.head < 0 or tok.head > n:
            raise ConlluStructureError(
                f"token {tok.index} head {tok.head} out of range", ref
            )
        if tok.head == tok.index:
            raise ConlluStructureError(f"token {tok.index} is its own head", ref)
    # Walk each token toward the root; revisiting a token means a cycle.
    for tok in tokens:
        seen = set()
        cur = tok.index
        while cur != 0:
            if cur in seen:
                raise ConlluStructureError(
                    f"cyclic head chain through token {tok.index}", ref
                )
            seen.add(cur)
            cur = tokens[cur - 1].head
    return Sentence(tokens=tuple(tokens), sent_index=sent_index)


def parse_conllu(source: str | bytes | IO) -> list[Sentence]:
    """Parse CoNLL-U text into Sentences.

    ``source`` may be a string, UTF-8 bytes, or a readable file object.
    Raises ConlluParseError / ConlluStructureError on malformed input.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")

    sentences: list[Sentence] = []
    pending: list[Token] = []
    pending_first_line = 0

    def flush() -> None:
        nonlocal pending
        if pending:
            sentences.append(_validate(pending, len(sentences), pending_first_line))
            pending = []

    for line_no, raw in enumerate(source.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != NUM_FIELDS:
            raise ConlluParseError(
                f"expected {NUM_FIELDS} tab-separated fields, got {len(fields)}", line_no
            )
        tok_id = fields[0]
        if "-" in tok_id or "." in tok_id:
            continue  # multiword-token range or empty node
        try:
            index = int(tok_id)
        except ValueError:
            raise ConlluParseError(f"non-integer token id {tok_id!r}", line_no) from None
        try:
            head = int(fields[6])
        except ValueError:
            raise ConlluParseError(f"non-integer HEAD {fields[6]!r}", line_no) from None
        if not pending:
            pending_first_line = line_no
        pending.append(
            Token(
                index=index,
                form=fields[1],
                lemma=fields[2],
                upos=fields[3],
                head=head,
                deprel=fields[7],
            )
        )
    flush()
    return sentences


def sentence_to_conllu(sentence: Sentence) -> str:
    """Serialize the six retained columns back to CoNLL-U (others as '_')."""
    lines = []
    for tok in sentence.tokens:
        lines.append(
            "\t".join(
                [
                    str(tok.index),
                    tok.form,
                    tok.lemma,
                    tok.upos,
                    "_",  # XPOS
                    "_",  # FEATS
                    str(tok.head),
                    tok.deprel,
                    "_",  # DEPS
                    "_",  # MISC
                ]
            )
        )
    return "\n".join(lines) + "\n"
