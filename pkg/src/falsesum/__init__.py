"""Pipeline for building document-level NLI data from summarization corpora.

Stages: ingest parsed (document, summary) pairs, extract predicate-argument
tuples, format control-coded mask-filling tasks, bridge to a seq2seq
generator, emit contrastive NLI examples, and evaluate consistency
classifiers.
"""

__version__ = "0.1.0"

from .conllu import Sentence, Token, parse_conllu, sentence_to_conllu
from .corpus import DocSummaryUnit, ParsedDocument, SkipEntry, load_corpus
from .relations import RelationTuple, Span, extract_tuples, select_document_tuples, span_text
from .formatting import FormattedExample, MaskedSummary, make_example, parse_input, render_input
from .bridge import GenerationRecord, mock_generate, read_generation_output, write_generation_batch
from .nli import NliExample, ablate, emit_nli, hypothesis_only, merge_for_augmentation, sample_examples
from .metrics import (
    EvalRecord,
    RankCandidate,
    RankInstance,
    ScoreMatrix,
    aggregate_consistency,
    balanced_accuracy,
    extractive_fragments,
    mean_over_seeds,
    overlap_score,
    partition_by_overlap,
    precision_at_1,
)
from .seeding import derive_rng, derive_uniform

__all__ = [
    "Sentence", "Token", "parse_conllu", "sentence_to_conllu",
    "DocSummaryUnit", "ParsedDocument", "SkipEntry", "load_corpus",
    "RelationTuple", "Span", "extract_tuples", "select_document_tuples", "span_text",
    "FormattedExample", "MaskedSummary", "make_example", "parse_input", "render_input",
    "GenerationRecord", "mock_generate", "read_generation_output", "write_generation_batch",
    "NliExample", "ablate", "emit_nli", "hypothesis_only", "merge_for_augmentation",
    "sample_examples",
    "EvalRecord", "RankCandidate", "RankInstance", "ScoreMatrix",
    "aggregate_consistency", "balanced_accuracy", "extractive_fragments",
    "mean_over_seeds", "overlap_score", "partition_by_overlap", "precision_at_1",
    "derive_rng", "derive_uniform",
]
