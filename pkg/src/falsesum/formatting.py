"""Turn (document tuples, summary) units into control-coded seq2seq tasks.

The per-unit recipe, in order: select document tuples, corrupt each one
by dropping a random argument, lemmatize span roots, choose a control
code, pick the summary's gold frame, optionally reduce retained gold
spans, mask the summary, assemble shuffled predicate/argument lists, and
render the flat input template.

Template (byte-exact):

    Predicates: p1, p2; Arguments: a1, a2; Code: intrinsic; Summary: <span_0> ...

Items are joined with ", ", sections with "; ", the code is lowercase,
mask tokens are ``<span_0>`` for the predicate and ``<span_i>`` (i >= 1,
surface order) for masked arguments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .conllu import Sentence
from .corpus import DocSummaryUnit
from .errors import PipelineError
from .relations import (
    RelationTuple,
    Span,
    base_rel,
    dependents_map,
    extract_tuples,
    select_document_tuples,
    span_text,
    span_tokens,
    subtree_indices,
)
from .seeding import derive_rng, derive_uniform

INTRINSIC = "intrinsic"
EXTRINSIC = "extrinsic"
CODES = (INTRINSIC, EXTRINSIC)

CODE_BALANCE = 0.5
REDUCTION_PROB = 0.10
DEFAULT_TRAIN_FRACTION = 0.6

MODIFIER_UPOS = {"ADJ", "ADV"}
MODIFIER_RELS = {"amod", "advmod", "acl"}

MASK_RE = re.compile(r"<span_(\d+)>")


class SkipUnit(Exception):
    """Control flow for units that cannot become examples."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class MaskEntry:
    mask_id: int
    span: Span
    text: str  # inflected gold surface form


@dataclass(frozen=True)
class MaskedSummary:
    text: str
    mask_map: tuple[MaskEntry, ...]


@dataclass(frozen=True)
class SpanItem:
    """A rendered list entry plus the dedup key used by gold-span removal."""

    text: str
    root_lemma: str


@dataclass(frozen=True)
class FormattedExample:
    doc_id: str
    summary_index: int
    mode: str  # "train" | "test"
    code: str
    predicates: tuple[str, ...]
    arguments: tuple[str, ...]
    masked_summary: MaskedSummary
    input_text: str
    target_text: str | None

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "summary_index": self.summary_index,
            "mode": self.mode,
            "code": self.code,
            "input": self.input_text,
            "target": self.target_text,
            "mask_map": [[entry.mask_id, entry.text] for entry in self.masked_summary.mask_map],
        }


def corrupt_tuple(tup: RelationTuple, rng: np.random.Generator) -> RelationTuple:
    """Drop one uniformly chosen argument; 0-argument tuples pass through."""
    if not tup.arguments:
        return tup
    drop = int(rng.integers(0, len(tup.arguments)))
    kept = tuple(arg for i, arg in enumerate(tup.arguments) if i != drop)
    return RelationTuple(predicate=tup.predicate, arguments=kept)


def root_lemma(span: Span, sentence: Sentence) -> tuple[str, bool]:
    """The span root's lemma and whether it was missing ('_' or empty)."""
    root_tok = sentence.token(span.root)
    if root_tok.lemma in ("_", ""):
        return root_tok.form, True
    return root_tok.lemma, False


def lemmatize_root(span: Span, sentence: Sentence) -> str:
    """Span text with the dependency root's form replaced by its lemma."""
    lemma, _missing = root_lemma(span, sentence)
    forms = [lemma if tok.index == span.root else tok.form for tok in span_tokens(span, sentence)]
    return " ".join(forms)


def _reduced_token_indices(span: Span, sentence: Sentence) -> list[int]:
    """Indices kept after dropping modifier subtrees; the root survives."""
    children = dependents_map(sentence)
    in_span = set(range(span.first, span.last + 1))
    dropped: set[int] = set()
    for tok in span_tokens(span, sentence):
        if tok.index == span.root:
            continue
        if tok.upos in MODIFIER_UPOS or base_rel(tok.deprel) in MODIFIER_RELS:
            dropped |= subtree_indices(sentence, tok.index, children) & in_span
    dropped.discard(span.root)
    return [i for i in sorted(in_span) if i not in dropped]


def reduce_span(span: Span, sentence: Sentence, rng: np.random.Generator) -> str:
    """With probability REDUCTION_PROB drop modifier subtrees, else intact."""
    if rng.random() >= REDUCTION_PROB:
        return span_text(span, sentence)
    kept = _reduced_token_indices(span, sentence)
    return " ".join(sentence.token(i).form for i in kept)


def choose_code(rng: np.random.Generator) -> str:
    return INTRINSIC if rng.random() < CODE_BALANCE else EXTRINSIC


def choose_gold_frame(summary: Sentence) -> RelationTuple:
    """The summary tuple with the most arguments (earliest predicate on ties)."""
    tuples = extract_tuples(summary, origin="summary")
    if not tuples:
        raise SkipUnit("no_gold_frame")
    return max(tuples, key=lambda t: (len(t.arguments), -t.predicate.root))


def apply_mask(summary: Sentence, frame: RelationTuple, mask_predicate: bool,
               masked_arg_positions: list[int]) -> MaskedSummary:
    """Mask chosen frame slots in the summary.

    The predicate is always ``<span_0>``; masked arguments get ids 1..k
    in surface order. Unmasked tokens pass through verbatim, so
    substituting the mask_map entries back reproduces the summary.
    """
    entries: list[MaskEntry] = []
    if mask_predicate:
        entries.append(MaskEntry(0, frame.predicate, span_text(frame.predicate, summary)))
    masked_args = sorted(
        (frame.arguments[p] for p in masked_arg_positions), key=lambda s: s.first
    )
    for i, span in enumerate(masked_args, start=1):
        entries.append(MaskEntry(i, span, span_text(span, summary)))
    if not entries:
        raise PipelineError("mask subset must be non-empty")

    by_first = {entry.span.first: entry for entry in entries}
    pieces: list[str] = []
    index = 1
    while index <= len(summary):
        entry = by_first.get(index)
        if entry is not None:
            pieces.append(f"<span_{entry.mask_id}>")
            index = entry.span.last + 1
        else:
            pieces.append(summary.token(index).form)
            index += 1
    entries.sort(key=lambda e: e.mask_id)
    return MaskedSummary(text=" ".join(pieces), mask_map=tuple(entries))


def mask_summary(summary: Sentence, frame: RelationTuple,
                 rng: np.random.Generator) -> MaskedSummary:
    """Mask a uniformly random non-empty subset of {predicate} + arguments."""
    n_slots = 1 + len(frame.arguments)
    bits = int(rng.integers(1, 2**n_slots))
    mask_predicate = bool(bits & 1)
    arg_positions = [j for j in range(len(frame.arguments)) if bits & (1 << (j + 1))]
    return apply_mask(summary, frame, mask_predicate, arg_positions)


def assemble_lists(
    doc_predicates: list[SpanItem],
    doc_arguments: list[SpanItem],
    gold_predicates: list[SpanItem],
    gold_arguments: list[SpanItem],
    mode: str,
    code: str,
    rng: np.random.Generator,
) -> tuple[list[str], list[str]]:
    """Build the final P and A lists.

    Gold (summary-origin) spans are included only for intrinsic training
    inputs. Whenever they are excluded, document spans sharing a
    lemmatized root with any gold span are removed too (case-insensitive),
    so the model cannot copy the answer from a near-duplicate.
    """
    include_gold = mode == "train" and code == INTRINSIC
    if include_gold:
        predicates = list(doc_predicates) + list(gold_predicates)
        arguments = list(doc_arguments) + list(gold_arguments)
    else:
        gold_roots = {
            item.root_lemma.lower() for item in list(gold_predicates) + list(gold_arguments)
        }
        predicates = [p for p in doc_predicates if p.root_lemma.lower() not in gold_roots]
        arguments = [a for a in doc_arguments if a.root_lemma.lower() not in gold_roots]
    if not predicates and not arguments:
        raise SkipUnit("empty_lists")

    pred_texts = [p.text for p in predicates]
    arg_texts = [a.text for a in arguments]
    pred_order = rng.permutation(len(pred_texts))
    arg_order = rng.permutation(len(arg_texts))
    return (
        [pred_texts[int(i)] for i in pred_order],
        [arg_texts[int(i)] for i in arg_order],
    )


def render_input(predicates: list[str], arguments: list[str], code: str,
                 masked_text: str) -> str:
    if code not in CODES:
        raise PipelineError(f"unknown control code {code!r}")
    return (
        f"Predicates: {', '.join(predicates)}; "
        f"Arguments: {', '.join(arguments)}; "
        f"Code: {code}; "
        f"Summary: {masked_text}"
    )


# Separators are glued to the previous item's last character, while a
# comma or semicolon that is itself a token is always preceded by a
# space, so a lookbehind keeps token punctuation inside items.
_SECTION_RE = re.compile(
    r"^Predicates: (?P<preds>.*?)(?<!\s); Arguments: (?P<args>.*?)(?<!\s); "
    r"Code: (?P<code>[a-z]+); Summary: (?P<summary>.*)$",
    re.DOTALL,
)
_EMPTY_SECTION_RE = re.compile(
    r"^Predicates: (?P<preds>.*?); Arguments: (?P<args>.*?); "
    r"Code: (?P<code>[a-z]+); Summary: (?P<summary>.*)$",
    re.DOTALL,
)
_ITEM_SPLIT_RE = re.compile(r"(?<=\S), ")


def parse_input(text: str) -> tuple[list[str], list[str], str, str]:
    """Inverse of render_input; used by the mock generator."""
    match = _SECTION_RE.match(text) or _EMPTY_SECTION_RE.match(text)
    if match is None:
        raise PipelineError(f"input does not match template: {text[:80]!r}")
    code = match.group("code")
    if code not in CODES:
        raise PipelineError(f"unknown control code {code!r}")

    def items(section: str) -> list[str]:
        if not section:
            return []
        return _ITEM_SPLIT_RE.split(section)

    return (
        items(match.group("preds")),
        items(match.group("args")),
        code,
        match.group("summary"),
    )


def _span_item(span: Span, sentence: Sentence, reduce_rng: np.random.Generator | None,
               stats: dict) -> SpanItem:
    """Lemmatize (and, for retained gold spans, possibly reduce) one span."""
    lemma, missing = root_lemma(span, sentence)
    if missing:
        stats["missing_lemma"] = stats.get("missing_lemma", 0) + 1
    kept = list(range(span.first, span.last + 1))
    if reduce_rng is not None and reduce_rng.random() < REDUCTION_PROB:
        kept = _reduced_token_indices(span, sentence)
        if len(kept) < span.last - span.first + 1:
            stats["reduced_spans"] = stats.get("reduced_spans", 0) + 1
    forms = [lemma if i == span.root else sentence.token(i).form for i in kept]
    return SpanItem(text=" ".join(forms), root_lemma=lemma)


def unit_mode(seed: int, doc_id: str, summary_index: int,
              train_fraction: float = DEFAULT_TRAIN_FRACTION) -> str:
    """Hash-based train/test split, independent of corpus order."""
    coin = derive_uniform(seed, doc_id, summary_index, "split")
    return "train" if coin < train_fraction else "test"


def make_example(unit: DocSummaryUnit, mode: str, seed: int,
                 force_code: str | None = None) -> tuple[FormattedExample, dict]:
    """Build one seq2seq example for a unit; raises SkipUnit when impossible."""
    if mode not in ("train", "test"):
        raise PipelineError(f"unknown mode {mode!r}")
    if force_code is not None and force_code not in CODES:
        raise PipelineError(f"unknown control code {force_code!r}")
    stats: dict = {}

    tuples_rng = derive_rng(seed, unit.doc_id, 0, "doc_tuples")
    doc_tuples = select_document_tuples(unit.document, tuples_rng)

    corrupt_rng = derive_rng(seed, unit.doc_id, unit.summary_index, "corrupt")
    corrupted = [corrupt_tuple(t, corrupt_rng) for t in doc_tuples]

    if force_code is not None:
        code = force_code
    else:
        code = choose_code(derive_rng(seed, unit.doc_id, unit.summary_index, "code"))

    frame = choose_gold_frame(unit.summary)

    include_gold = mode == "train" and code == INTRINSIC
    reduce_rng = (
        derive_rng(seed, unit.doc_id, unit.summary_index, "reduce") if include_gold else None
    )
    gold_predicates = [_span_item(frame.predicate, unit.summary, reduce_rng, stats)]
    gold_arguments = [
        _span_item(arg, unit.summary, reduce_rng, stats) for arg in frame.arguments
    ]

    doc_predicates: list[SpanItem] = []
    doc_arguments: list[SpanItem] = []
    for tup in corrupted:
        pred_sentence = unit.document.sentences[tup.predicate.sent_index]
        doc_predicates.append(_span_item(tup.predicate, pred_sentence, None, stats))
        for arg in tup.arguments:
            arg_sentence = unit.document.sentences[arg.sent_index]
            doc_arguments.append(_span_item(arg, arg_sentence, None, stats))

    masked = mask_summary(
        unit.summary, frame, derive_rng(seed, unit.doc_id, unit.summary_index, "mask")
    )

    predicates, arguments = assemble_lists(
        doc_predicates,
        doc_arguments,
        gold_predicates,
        gold_arguments,
        mode,
        code,
        derive_rng(seed, unit.doc_id, unit.summary_index, "assemble"),
    )

    input_text = render_input(predicates, arguments, code, masked.text)
    target_text = unit.summary.text() if mode == "train" else None
    example = FormattedExample(
        doc_id=unit.doc_id,
        summary_index=unit.summary_index,
        mode=mode,
        code=code,
        predicates=tuple(predicates),
        arguments=tuple(arguments),
        masked_summary=masked,
        input_text=input_text,
        target_text=target_text,
    )
    return example, stats
