from __future__ import annotations

import json

import pytest

from falsesum.bridge import GenerationRecord, mock_generate
from falsesum.errors import ContractViolation, UsageError
from falsesum.formatting import SkipUnit, make_example
from falsesum.jsonl import read_jsonl, write_jsonl
from falsesum.nli import (
    ENTAILMENT,
    NON_ENTAILMENT,
    NliExample,
    ablate,
    emit_nli,
    example_from_json,
    hypothesis_only,
    merge_for_augmentation,
    sample_examples,
)
from falsesum.seeding import derive_rng


def _generations(units, seed=11):
    out = []
    for unit in units:
        try:
            example, _ = make_example(unit, "test", seed)
        except SkipUnit:
            continue
        out.append(mock_generate(
            example, derive_rng(seed, unit.doc_id, unit.summary_index, "mock")))
    return out


def _synthetic(n, start=0):
    out = []
    for i in range(start, start + n):
        label = ENTAILMENT if i % 2 == 0 else NON_ENTAILMENT
        out.append(NliExample(f"p{i:03d}", f"doc {i}", f"hyp {i}", label, "gold"))
    return out


# --- emission -------------------------------------------------------------------

def test_emit_pairs_every_generated_unit(units):
    generations = _generations(units)
    assert len(generations) == 10
    examples = emit_nli(units, generations)
    assert len(examples) == 20
    assert sum(e.label == ENTAILMENT for e in examples) == 10
    assert sum(e.label == NON_ENTAILMENT for e in examples) == 10

    by_key = {(g.doc_id, g.summary_index): g for g in generations}
    expected_pairs = [
        f"{u.doc_id}:{u.summary_index}"
        for u in units if (u.doc_id, u.summary_index) in by_key
        for _ in range(2)
    ]
    assert [e.pair_id for e in examples] == expected_pairs

    for pos, neg in zip(examples[::2], examples[1::2]):
        assert pos.label == ENTAILMENT and pos.provenance == "gold"
        assert neg.label == NON_ENTAILMENT
        doc_id, index = neg.pair_id.split(":")
        gen = by_key[(doc_id, int(index))]
        assert neg.provenance == f"generated-{gen.code}"
        assert neg.hypothesis == gen.generated
        assert pos.premise == neg.premise


def test_emit_premise_is_the_full_document(units):
    generations = _generations(units)
    examples = emit_nli(units, generations)
    docs = {u.doc_id: u.document.raw_text for u in units}
    summaries = {f"{u.doc_id}:{u.summary_index}": u.summary.text() for u in units}
    for example in examples:
        doc_id = example.pair_id.split(":")[0]
        assert example.premise == docs[doc_id]
        if example.provenance == "gold":
            assert example.hypothesis == summaries[example.pair_id]


def test_emit_drops_units_without_generation(units):
    generations = _generations(units)[:7]
    examples = emit_nli(units, generations)
    assert len(examples) == 14


def test_emit_rejects_orphan_generations(units):
    generations = _generations(units)
    generations.append(GenerationRecord("ghost-9999", 3, "intrinsic", "boo"))
    with pytest.raises(ContractViolation) as err:
        emit_nli(units, generations)
    assert "ghost-9999:3" in str(err.value)


def test_emit_rejects_duplicate_generations(units):
    generations = _generations(units)
    generations.append(generations[0])
    with pytest.raises(ContractViolation) as err:
        emit_nli(units, generations)
    assert "duplicate" in str(err.value)


# --- ablations -------------------------------------------------------------------

def test_contrastive_keeps_one_per_pair(units):
    examples = emit_nli(units, _generations(units))
    kept = ablate(examples, "-contrastive", 11)
    assert len(kept) == len(examples) // 2
    assert [e.pair_id for e in kept] == sorted(
        {e.pair_id for e in examples},
        key=[e.pair_id for e in examples].index,
    )
    groups = {e.pair_id: [] for e in examples}
    for e in examples:
        groups[e.pair_id].append(e)
    for e in kept:
        assert e in groups[e.pair_id]


def test_contrastive_is_balanced_over_many_pairs():
    examples = []
    for i in range(10_000):
        pair = f"pair-{i:05d}"
        examples.append(NliExample(pair, "d", "pos", ENTAILMENT, "gold"))
        examples.append(NliExample(pair, "d", "neg", NON_ENTAILMENT,
                                   "generated-intrinsic"))
    kept = ablate(examples, "-contrastive", 11)
    assert len(kept) == 10_000
    rate = sum(e.label == ENTAILMENT for e in kept) / len(kept)
    assert 0.48 <= rate <= 0.52


def test_contrastive_keeps_singleton_groups():
    lone = NliExample("solo", "d", "h", NON_ENTAILMENT, "base")
    assert ablate([lone], "-contrastive", 11) == [lone]


def test_provenance_ablations_drop_only_their_negatives():
    examples = []
    for i in range(6):
        examples.append(NliExample(f"i{i}", "d", "h", NON_ENTAILMENT,
                                   "generated-intrinsic"))
    for i in range(4):
        examples.append(NliExample(f"e{i}", "d", "h", NON_ENTAILMENT,
                                   "generated-extrinsic"))
    examples += _synthetic(4)

    no_intrinsic = ablate(examples, "-intrinsic", 11)
    assert len(no_intrinsic) == 8
    assert all(e.provenance != "generated-intrinsic" for e in no_intrinsic)

    no_extrinsic = ablate(examples, "extrinsic", 11)  # leading dash optional
    assert len(no_extrinsic) == 10
    assert all(e.provenance != "generated-extrinsic" for e in no_extrinsic)


def test_unknown_variant_is_a_usage_error():
    with pytest.raises(UsageError):
        ablate([], "-sideways", 11)


# --- sampling and probes ------------------------------------------------------------

SAMPLE_IDX = [
    1, 2, 5, 6, 8, 9, 14, 15, 17, 18, 24, 25, 26, 27, 29, 30, 33, 38, 43, 44,
    46, 47, 49, 50, 51, 57, 59, 62, 63, 64, 65, 67, 68, 71, 72, 73, 74, 76, 77,
    78, 80, 82, 86, 87, 89, 90, 91, 92, 95, 100, 103, 104, 106, 107, 110, 111,
    114, 115, 116, 117, 119, 120, 123, 124, 127, 128, 129, 130, 131, 135, 136,
    137, 141, 145, 148, 149, 153, 155, 158, 160, 162, 164, 166, 168, 169, 171,
    176, 178, 179, 184, 185, 187, 188, 189, 190, 191, 194, 195, 196, 198,
]


def test_sample_golden_indices():
    pool = _synthetic(200)
    picked = sample_examples(pool, 100, 11)
    assert [pool.index(e) for e in picked] == SAMPLE_IDX


def test_sample_preserves_order_and_handles_edges():
    pool = _synthetic(10)
    assert sample_examples(pool, 10, 11) == pool
    assert sample_examples(pool, 0, 11) == []
    subset = sample_examples(pool, 4, 11)
    positions = [pool.index(e) for e in subset]
    assert positions == sorted(positions)
    assert len(set(positions)) == 4


def test_sample_too_large_names_both_sizes():
    with pytest.raises(UsageError) as err:
        sample_examples(_synthetic(3), 5, 11)
    assert "5" in str(err.value) and "3" in str(err.value)


def test_hypothesis_only_blanks_premises():
    pool = _synthetic(6)
    probed = hypothesis_only(pool)
    assert all(e.premise == "" for e in probed)
    assert [
        (e.pair_id, e.hypothesis, e.label, e.provenance) for e in probed
    ] == [
        (e.pair_id, e.hypothesis, e.label, e.provenance) for e in pool
    ]
    assert all(e.premise != "" for e in pool)  # originals untouched


# --- merging with a 3-class base set -------------------------------------------------

def _write_base(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records))


def test_merge_maps_labels_and_shuffles(tmp_path):
    base = tmp_path / "base.jsonl"
    extra = tmp_path / "extra.jsonl"
    out = tmp_path / "merged.jsonl"
    _write_base(base, [
        {"premise": "p1", "hypothesis": "h1", "label": "entailment"},
        {"premise": "p2", "hypothesis": "h2", "label": "neutral"},
        {"premise": "p3", "hypothesis": "h3", "label": "contradiction"},
    ])
    ours = _synthetic(5)
    write_jsonl(extra, (e.to_json() for e in ours))

    assert merge_for_augmentation(base, extra, 11, out) == 8
    merged = [example_from_json(rec) for _, rec in read_jsonl(out)]
    assert len(merged) == 8

    base_part = sorted(
        (e for e in merged if e.provenance == "base"), key=lambda e: e.pair_id)
    assert [e.pair_id for e in base_part] == ["base-1", "base-2", "base-3"]
    assert [e.label for e in base_part] == [
        ENTAILMENT, NON_ENTAILMENT, NON_ENTAILMENT]
    ours_part = {e for e in merged if e.provenance != "base"}
    assert ours_part == set(ours)


def test_merge_is_deterministic(tmp_path):
    base = tmp_path / "base.jsonl"
    extra = tmp_path / "extra.jsonl"
    _write_base(base, [
        {"premise": f"p{i}", "hypothesis": f"h{i}", "label": "neutral"}
        for i in range(20)
    ])
    write_jsonl(extra, (e.to_json() for e in _synthetic(20)))
    out1, out2 = tmp_path / "m1.jsonl", tmp_path / "m2.jsonl"
    merge_for_augmentation(base, extra, 11, out1)
    merge_for_augmentation(base, extra, 11, out2)
    assert out1.read_bytes() == out2.read_bytes()
    # A different seed gives a different order of the same records.
    out3 = tmp_path / "m3.jsonl"
    merge_for_augmentation(base, extra, 12, out3)
    assert sorted(out1.read_text().splitlines()) == sorted(out3.read_text().splitlines())


def test_merge_rejects_unknown_base_label(tmp_path):
    base = tmp_path / "base.jsonl"
    extra = tmp_path / "extra.jsonl"
    _write_base(base, [
        {"premise": "p", "hypothesis": "h", "label": "entailment"},
        {"premise": "p", "hypothesis": "h", "label": "maybe"},
    ])
    write_jsonl(extra, [])
    with pytest.raises(ContractViolation) as err:
        merge_for_augmentation(base, extra, 11, tmp_path / "out.jsonl")
    assert "line 2" in str(err.value) and "maybe" in str(err.value)


def test_merge_rejects_missing_base_field(tmp_path):
    base = tmp_path / "base.jsonl"
    extra = tmp_path / "extra.jsonl"
    _write_base(base, [{"premise": "p", "label": "entailment"}])
    write_jsonl(extra, [])
    with pytest.raises(ContractViolation) as err:
        merge_for_augmentation(base, extra, 11, tmp_path / "out.jsonl")
    assert "hypothesis" in str(err.value)


def test_merge_validates_our_records_too(tmp_path):
    base = tmp_path / "base.jsonl"
    extra = tmp_path / "extra.jsonl"
    _write_base(base, [])
    _write_base(extra, [{
        "pair_id": "x", "premise": "p", "hypothesis": "h",
        "label": "contradiction", "provenance": "gold",
    }])
    with pytest.raises(ContractViolation) as err:
        merge_for_augmentation(base, extra, 11, tmp_path / "out.jsonl")
    assert "contradiction" in str(err.value)
