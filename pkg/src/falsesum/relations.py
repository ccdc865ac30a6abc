"""Predicate-argument tuple extraction over dependency parses.

A deliberately small OpenIE-style pattern set, frozen by golden tests:

* predicate heads are VERB tokens that are not modifier clauses
  (amod/acl/advcl) and not attached as aux/cop/xcomp (those merge into
  their governor's predicate instead);
* a predicate span is the head plus the contiguous run of merged
  material around it: aux/cop/mark/particle dependents, xcomp chains,
  and case markers of its arguments ("plead guilty to",
  "appear before");
* argument spans are the contiguous subtree projections of
  nsubj/obj/iobj/obl/nmod dependents (plus nominal-headed ccomp),
  minus their own case markers and any punctuation;
* tuples need at least one argument.

Spans are contiguous token ranges; a subtree that projects to a
non-contiguous set is snapped to the largest contiguous run containing
its root.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conllu import Sentence, Token
from .corpus import ParsedDocument
from .errors import PipelineError

PRED_EXCLUDED_BASES = {"amod", "acl", "advcl"}
MERGED_BASES = {"aux", "cop", "xcomp"}
PRED_ATTACH_BASES = {"aux", "cop", "mark"}
PRED_ATTACH_EXACT = {"compound:prt"}
ARG_BASES = {"nsubj", "obj", "iobj", "obl", "nmod"}
NOMINAL_UPOS = {"NOUN", "PROPN", "PRON", "NUM"}

MAX_SENTENCES = 15
MAX_TUPLES_PER_SENTENCE = 2


@dataclass(frozen=True)
class Span:
    """Contiguous token range; indices are 1-based and inclusive."""

    sent_index: int
    first: int
    last: int
    root: int
    kind: str  # "predicate" | "argument"
    origin: str  # "document" | "summary"


@dataclass(frozen=True)
class RelationTuple:
    predicate: Span
    arguments: tuple[Span, ...]


def base_rel(deprel: str) -> str:
    return deprel.split(":", 1)[0]


def dependents_map(sentence: Sentence) -> dict[int, list[Token]]:
    children: dict[int, list[Token]] = {}
    for tok in sentence.tokens:
        children.setdefault(tok.head, []).append(tok)
    return children


def subtree_indices(sentence: Sentence, root_index: int,
                    children: dict[int, list[Token]] | None = None) -> set[int]:
    """All token indices in the subtree rooted at root_index (inclusive)."""
    if children is None:
        children = dependents_map(sentence)
    out: set[int] = set()
    stack = [root_index]
    while stack:
        idx = stack.pop()
        if idx in out:
            continue
        out.add(idx)
        stack.extend(tok.index for tok in children.get(idx, ()))
    return out


def _contiguous_run(indices: set[int], anchor: int) -> tuple[int, int]:
    """Largest contiguous run inside ``indices`` containing ``anchor``."""
    first = last = anchor
    while first - 1 in indices:
        first -= 1
    while last + 1 in indices:
        last += 1
    return first, last


def _merged_xcomp(head: Token, children: dict[int, list[Token]]) -> list[Token]:
    """Follow xcomp chains downward from the head (any part of speech,
    so "plans to give" and "plead guilty" both merge)."""
    merged: list[Token] = []
    frontier = [head]
    while frontier:
        node = frontier.pop()
        for child in children.get(node.index, ()):
            if base_rel(child.deprel) == "xcomp":
                merged.append(child)
                frontier.append(child)
    return merged


def extract_tuples(sentence: Sentence, origin: str = "document") -> list[RelationTuple]:
    """Extract predicate-argument tuples from one sentence.

    Deterministic, no randomness. Tuples are ordered by predicate
    position; arguments by surface order.
    """
    children = dependents_map(sentence)
    tuples: list[RelationTuple] = []

    for head in sentence.tokens:
        if head.upos != "VERB":
            continue
        rel = base_rel(head.deprel)
        if rel in PRED_EXCLUDED_BASES or rel in MERGED_BASES:
            continue

        merged = _merged_xcomp(head, children)
        core = [head] + merged

        # Arguments attach to the head or to any merged xcomp verb.
        arg_heads: list[Token] = []
        for verb in core:
            for child in children.get(verb.index, ()):
                child_rel = base_rel(child.deprel)
                if child_rel in ARG_BASES:
                    arg_heads.append(child)
                elif child_rel == "ccomp" and child.upos in NOMINAL_UPOS:
                    arg_heads.append(child)

        candidates: set[int] = {head.index}
        for verb in core:
            candidates.add(verb.index)
            for child in children.get(verb.index, ()):
                if base_rel(child.deprel) in PRED_ATTACH_BASES or child.deprel in PRED_ATTACH_EXACT:
                    candidates.add(child.index)
        # Case markers of arguments fold into the predicate when adjacent.
        case_exclusions: dict[int, set[int]] = {}
        for arg in arg_heads:
            excluded: set[int] = set()
            for child in children.get(arg.index, ()):
                if base_rel(child.deprel) == "case":
                    case_ids = subtree_indices(sentence, child.index, children)
                    candidates.update(case_ids)
                    excluded.update(case_ids)
            case_exclusions[arg.index] = excluded

        pred_first, pred_last = _contiguous_run(candidates, head.index)
        predicate = Span(
            sent_index=sentence.sent_index,
            first=pred_first,
            last=pred_last,
            root=head.index,
            kind="predicate",
            origin=origin,
        )

        arguments: list[Span] = []
        for arg in arg_heads:
            members = subtree_indices(sentence, arg.index, children)
            members -= case_exclusions[arg.index]
            members -= {tok.index for tok in sentence.tokens
                        if tok.index in members and base_rel(tok.deprel) == "punct"}
            first, last = _contiguous_run(members, arg.index)
            arguments.append(
                Span(
                    sent_index=sentence.sent_index,
                    first=first,
                    last=last,
                    root=arg.index,
                    kind="argument",
                    origin=origin,
                )
            )
        if not arguments:
            continue
        arguments.sort(key=lambda s: s.first)
        tuples.append(RelationTuple(predicate=predicate, arguments=tuple(arguments)))

    tuples.sort(key=lambda t: t.predicate.root)
    return tuples


def select_document_tuples(document: ParsedDocument,
                           rng: np.random.Generator) -> list[RelationTuple]:
    """Extract from the first MAX_SENTENCES sentences, keeping at most
    MAX_TUPLES_PER_SENTENCE per sentence (uniform, without replacement,
    original order re-imposed)."""
    selected: list[RelationTuple] = []
    for sentence in document.sentences[:MAX_SENTENCES]:
        tuples = extract_tuples(sentence, origin="document")
        if len(tuples) > MAX_TUPLES_PER_SENTENCE:
            picks = rng.choice(len(tuples), size=MAX_TUPLES_PER_SENTENCE, replace=False)
            tuples = [tuples[i] for i in sorted(int(p) for p in picks)]
        selected.extend(tuples)
    return selected


def span_tokens(span: Span, sentence: Sentence) -> list[Token]:
    if span.sent_index != sentence.sent_index:
        raise PipelineError(
            f"span sentence {span.sent_index} does not match sentence {sentence.sent_index}"
        )
    if not (1 <= span.first <= span.root <= span.last <= len(sentence)):
        raise PipelineError(
            f"span [{span.first}, {span.last}] root {span.root} out of range "
            f"for sentence of {len(sentence)} tokens"
        )
    return list(sentence.tokens[span.first - 1:span.last])


def span_text(span: Span, sentence: Sentence) -> str:
    """Space-joined FORM fields of the span's tokens."""
    return " ".join(tok.form for tok in span_tokens(span, sentence))
