from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

import pytest

from falsesum.cli import main
from falsesum.errors import PipelineError

from fixture_corpus import write_corpus


def _run(argv):
    rc = main([str(a) for a in argv])
    assert rc == 0, f"stage failed: {argv}"


def _manifest(out_dir, stage):
    return json.loads((Path(out_dir) / f"{stage}.manifest.json").read_text())


def _rows(path):
    return [json.loads(line) for line in Path(path).read_text().splitlines()]


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One full chain: ingest -> extract -> format -> mock-generate -> emit."""
    root = tmp_path_factory.mktemp("chain")
    paths = {k: str(v) for k, v in write_corpus(root / "corpus").items()}
    corpus = ["--documents", paths["documents"],
              "--summaries", paths["summaries"], "--parses", paths["parses"]]

    work = root / "work"
    _run(["ingest", *corpus, "--out-dir", work])
    _run(["extract", *corpus, "--out", work / "tuples.jsonl"])
    _run(["format", *corpus, "--out-dir", work / "formatted", "--seed", 11])
    _run(["mock-generate", "--test-file", work / "formatted" / "test.jsonl",
          "--gen-in", work / "gen" / "batch.jsonl",
          "--gen-out", work / "gen" / "output.jsonl", "--seed", 11])
    _run(["emit", *corpus, "--generations", work / "gen" / "output.jsonl",
          "--out", work / "nli" / "nli.jsonl"])
    return {"root": root, "corpus": corpus, "work": work,
            "nli": work / "nli" / "nli.jsonl"}


# --- chain outputs -----------------------------------------------------------------

def test_ingest_counts(pipeline):
    counts = _manifest(pipeline["work"], "ingest")["counts"]
    assert counts == {"units": 11, "documents": 5, "skips": 0}


def test_extract_dump(pipeline):
    counts = _manifest(pipeline["work"], "extract")["counts"]
    assert counts == {"documents": 5, "tuples": 33}
    rows = _rows(pipeline["work"] / "tuples.jsonl")
    assert Counter(r["doc_id"] for r in rows) == {
        "band-0003": 18, "climate-0002": 4, "court-0001": 4,
        "dance-0004": 4, "orchard-0005": 3,
    }
    # The 16-sentence document is cut off at 15 sentences.
    assert max(r["sent_index"] for r in rows) == 14
    assert all(r["args"] for r in rows)


def test_format_counts_at_seed_11(pipeline):
    counts = _manifest(pipeline["work"] / "formatted", "format")["counts"]
    assert counts["units"] == 11
    assert counts["train"] == 1
    assert counts["test"] == 9
    assert counts["skipped_units"] == 1
    assert counts["corpus_skips"] == 0
    train = _rows(pipeline["work"] / "formatted" / "train.jsonl")
    assert [r["doc_id"] for r in train] == ["band-0003"]
    assert all(r["target"] for r in train)
    test = _rows(pipeline["work"] / "formatted" / "test.jsonl")
    assert len(test) == 9
    assert all(r["target"] is None for r in test)
    skips = _rows(pipeline["work"] / "formatted" / "skip_report.jsonl")
    assert [s["reason"] for s in skips] == ["no_gold_frame:1"]


def test_generation_files(pipeline):
    batch = _rows(pipeline["work"] / "gen" / "batch.jsonl")
    assert len(batch) == 9
    assert all(set(r) == {"doc_id", "summary_index", "code", "input"} for r in batch)
    output = _rows(pipeline["work"] / "gen" / "output.jsonl")
    assert len(output) == 9
    assert all("<span_" not in r["generated"] for r in output)


def test_emit_output(pipeline):
    counts = _manifest(pipeline["work"] / "nli", "emit")["counts"]
    assert counts == {"units": 11, "generations": 9,
                      "rejected_generations": 0, "examples": 18}
    rows = _rows(pipeline["nli"])
    labels = Counter(r["label"] for r in rows)
    assert labels == {"entailment": 9, "non-entailment": 9}
    assert all(r["provenance"] == "gold" for r in rows[::2])
    assert all(r["provenance"].startswith("generated-") for r in rows[1::2])
    rejects = _rows(pipeline["work"] / "nli" / "generation_rejects.jsonl")
    assert rejects == []


def test_manifest_shape(pipeline):
    raw = (pipeline["work"] / "formatted" / "format.manifest.json").read_text()
    manifest = json.loads(raw)
    assert set(manifest) == {"stage", "seed", "inputs", "outputs", "counts"}
    assert manifest["stage"] == "format"
    assert manifest["seed"] == 11
    for digests in (manifest["inputs"], manifest["outputs"]):
        for name, digest in digests.items():
            assert "/" not in name
            assert len(digest) == 64 and int(digest, 16) >= 0
    assert raw == json.dumps(manifest, indent=2, sort_keys=True) + "\n"


def test_stage_prints_counts_to_stdout(pipeline, tmp_path, capsys):
    _run(["ingest", *pipeline["corpus"], "--out-dir", tmp_path])
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["stage"] == "ingest"
    assert out["counts"]["units"] == 11


# --- determinism -------------------------------------------------------------------

def test_format_reruns_are_byte_identical(pipeline, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out_dir in (a, b):
        _run(["format", *pipeline["corpus"], "--out-dir", out_dir, "--seed", 11])
    for name in ("train.jsonl", "test.jsonl", "skip_report.jsonl",
                 "format.manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_parallel_formatting_matches_serial(pipeline, tmp_path):
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"
    _run(["format", *pipeline["corpus"], "--out-dir", serial, "--seed", 11])
    _run(["format", *pipeline["corpus"], "--out-dir", parallel,
          "--seed", 11, "--jobs", 2])
    for name in ("train.jsonl", "test.jsonl", "skip_report.jsonl"):
        assert (serial / name).read_bytes() == (parallel / name).read_bytes()


def test_different_seed_changes_the_split(pipeline, tmp_path):
    other = tmp_path / "other"
    _run(["format", *pipeline["corpus"], "--out-dir", other, "--seed", 12])
    ours = _manifest(pipeline["work"] / "formatted", "format")["counts"]
    theirs = _manifest(other, "format")["counts"]
    assert ours["units"] == theirs["units"]
    assert (ours["train"], ours["test"]) != (theirs["train"], theirs["test"]) or \
        (pipeline["work"] / "formatted" / "test.jsonl").read_bytes() != \
        (other / "test.jsonl").read_bytes()


# --- flag and environment handling ----------------------------------------------------

def test_unknown_stage_is_an_argparse_error():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code != 0


def test_missing_input_file_exits_2(tmp_path, capsys):
    rc = main(["format", "--documents", str(tmp_path / "nope.jsonl"),
               "--summaries", str(tmp_path / "nope2.jsonl"),
               "--parses", str(tmp_path), "--out-dir", str(tmp_path / "out")])
    assert rc == 2
    err = json.loads(capsys.readouterr().err.strip())
    assert "missing input file" in err["error"]
    assert "nope" in err["error"]


def test_invalid_force_code_exits_2(pipeline, tmp_path, capsys):
    rc = main(["format", *pipeline["corpus"], "--out-dir", str(tmp_path),
               "--force-code", "banana"])
    assert rc == 2
    assert "banana" in json.loads(capsys.readouterr().err.strip())["error"]


def test_invalid_split_exits_2(pipeline, tmp_path, capsys):
    rc = main(["format", *pipeline["corpus"], "--out-dir", str(tmp_path),
               "--split", "1.5"])
    assert rc == 2
    assert "split" in json.loads(capsys.readouterr().err.strip())["error"]


def test_seed_env_override(pipeline, tmp_path, monkeypatch):
    monkeypatch.setenv("FALSESUM_SEED", "17")
    _run(["format", *pipeline["corpus"], "--out-dir", tmp_path / "env"])
    assert _manifest(tmp_path / "env", "format")["seed"] == 17
    # An explicit flag still wins over the environment.
    _run(["format", *pipeline["corpus"], "--out-dir", tmp_path / "flag",
          "--seed", 11])
    assert _manifest(tmp_path / "flag", "format")["seed"] == 11


def test_unparseable_env_value_exits_2(pipeline, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("FALSESUM_SEED", "eleven")
    rc = main(["format", *[str(a) for a in pipeline["corpus"]],
               "--out-dir", str(tmp_path)])
    assert rc == 2
    assert "FALSESUM_SEED" in json.loads(capsys.readouterr().err.strip())["error"]


def test_forced_code_applies_to_every_example(pipeline, tmp_path):
    _run(["format", *pipeline["corpus"], "--out-dir", tmp_path,
          "--seed", 11, "--force-code", "extrinsic"])
    rows = _rows(tmp_path / "train.jsonl") + _rows(tmp_path / "test.jsonl")
    assert rows and all(r["code"] == "extrinsic" for r in rows)


# --- downstream stages -----------------------------------------------------------------

def test_ablate_cli(pipeline, tmp_path):
    out = tmp_path / "contrastive.jsonl"
    _run(["ablate", "--in", pipeline["nli"], "--variant=-contrastive",
          "--seed", 11, "--out", out])
    rows = _rows(out)
    assert len(rows) == 9
    assert len({r["pair_id"] for r in rows}) == 9


def test_ablate_unknown_variant_exits_2(pipeline, tmp_path, capsys):
    rc = main(["ablate", "--in", str(pipeline["nli"]), "--variant=-sideways",
               "--seed", "11", "--out", str(tmp_path / "x.jsonl")])
    assert rc == 2
    assert "sideways" in json.loads(capsys.readouterr().err.strip())["error"]


def test_sample_cli(pipeline, tmp_path):
    out = tmp_path / "sampled.jsonl"
    _run(["sample", "--in", pipeline["nli"], "--n", 4, "--seed", 11, "--out", out])
    picked = _rows(out)
    source = _rows(pipeline["nli"])
    positions = [source.index(r) for r in picked]
    assert len(positions) == 4
    assert positions == sorted(positions)


def test_sample_too_large_exits_2(pipeline, tmp_path, capsys):
    rc = main(["sample", "--in", str(pipeline["nli"]), "--n", "99",
               "--seed", "11", "--out", str(tmp_path / "x.jsonl")])
    assert rc == 2
    message = json.loads(capsys.readouterr().err.strip())["error"]
    assert "99" in message and "18" in message


def test_probe_cli(pipeline, tmp_path):
    out = tmp_path / "probe.jsonl"
    _run(["probe", "--in", pipeline["nli"], "--out", out])
    rows = _rows(out)
    assert len(rows) == 18
    assert all(r["premise"] == "" for r in rows)
    assert [r["hypothesis"] for r in rows] == \
        [r["hypothesis"] for r in _rows(pipeline["nli"])]


def test_merge_cli(pipeline, tmp_path):
    base = tmp_path / "base.jsonl"
    base.write_text("".join(
        json.dumps({"premise": f"p{i}", "hypothesis": f"h{i}",
                    "label": ["entailment", "neutral", "contradiction"][i % 3]}) + "\n"
        for i in range(6)
    ))
    out = tmp_path / "merged.jsonl"
    _run(["merge", "--base", base, "--falsesum", pipeline["nli"],
          "--seed", 11, "--out", out])
    rows = _rows(out)
    assert len(rows) == 24
    assert sum(r["provenance"] == "base" for r in rows) == 6
    assert all(r["label"] in ("entailment", "non-entailment") for r in rows)


def test_emit_rejects_are_reported_not_fatal(pipeline, tmp_path):
    source = (pipeline["work"] / "gen" / "output.jsonl").read_text().splitlines()
    broken = json.loads(source[-1])
    broken["generated"] = "left a <span_9> behind"
    gen = tmp_path / "gen.jsonl"
    gen.write_text("".join(line + "\n" for line in source[:-1])
                   + json.dumps(broken) + "\n")
    _run(["emit", *pipeline["corpus"], "--generations", gen,
          "--out", tmp_path / "nli.jsonl", "--rejects", tmp_path / "rej.jsonl"])
    counts = _manifest(tmp_path, "emit")["counts"]
    assert counts["rejected_generations"] == 1
    assert counts["examples"] == 16
    rejects = _rows(tmp_path / "rej.jsonl")
    assert rejects == [{"line": len(source), "reason": "residual_mask"}]


def test_emit_filters_generations_for_unknown_units(pipeline, tmp_path):
    # Records for units outside the corpus are rejected by id, so the
    # stage succeeds and reports them instead of failing.
    gen = tmp_path / "gen.jsonl"
    extra = {"doc_id": "ghost-9999", "summary_index": 0,
             "code": "intrinsic", "generated": "boo"}
    gen.write_text((pipeline["work"] / "gen" / "output.jsonl").read_text()
                   + json.dumps(extra) + "\n")
    _run(["emit", *pipeline["corpus"], "--generations", gen,
          "--out", tmp_path / "nli.jsonl", "--rejects", tmp_path / "rej.jsonl"])
    counts = _manifest(tmp_path, "emit")["counts"]
    assert counts["rejected_generations"] == 1
    assert counts["examples"] == 18
    assert _rows(tmp_path / "rej.jsonl") == [{"line": 10, "reason": "unknown_id"}]


# --- evaluation stages ----------------------------------------------------------------

def _write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records))


def test_eval_cli_reports(tmp_path, capsys):
    gold = tmp_path / "gold.jsonl"
    _write_jsonl(gold, [
        {"example_id": "e1", "gold": "consistent"},
        {"example_id": "e2", "gold": "inconsistent"},
        {"example_id": "e3", "gold": "entailment"},
        {"example_id": "e4", "gold": "non-entailment"},
    ])
    pred_a = tmp_path / "a.jsonl"
    _write_jsonl(pred_a, [
        {"example_id": "e1", "score": 0.9},
        {"example_id": "e2", "score": 0.1},
        {"example_id": "e3", "score": 0.8},
        {"example_id": "e4", "score": 0.2},
    ])
    pred_b = tmp_path / "b.jsonl"
    _write_jsonl(pred_b, [
        {"example_id": "e1", "score": 0.9},
        {"example_id": "e2", "score": 0.9},
        {"example_id": "e3", "scores": [[0.1, 0.8], [0.5, 0.5]]},
        {"example_id": "e4", "score": 0.2},
    ])
    rank = tmp_path / "rank.jsonl"
    _write_jsonl(rank, [
        {"instance_id": "r1", "candidates": [
            {"summary_id": 0, "consistent": True, "score": 0.9},
            {"summary_id": 1, "consistent": False, "score": 0.4}]},
        {"instance_id": "r2", "candidates": [
            {"summary_id": 0, "consistent": False, "score": 0.7},
            {"summary_id": 1, "consistent": True, "score": 0.6}]},
        {"instance_id": "r3", "candidates": [
            {"summary_id": 0, "consistent": True, "score": 0.8}]},
    ])
    out = tmp_path / "report.json"
    _run(["eval", "--gold", gold, "--pred", pred_a, "--pred", pred_b,
          "--rank", rank, "--out", out])
    report = json.loads(out.read_text())
    assert report["per_file"]["a.jsonl"]["balanced_accuracy"] == 1.0
    assert report["per_file"]["b.jsonl"]["balanced_accuracy"] == pytest.approx(0.75)
    assert report["aggregate"]["balanced_accuracy"]["mean"] == pytest.approx(0.875)
    assert report["precision_at_1"] == pytest.approx(2 / 3)
    table = capsys.readouterr().out
    assert "a.jsonl" in table and "mean" in table and "precision@1" in table


def test_eval_without_inputs_exits_2(tmp_path, capsys):
    rc = main(["eval", "--out", str(tmp_path / "r.json")])
    assert rc == 2
    assert "pred" in json.loads(capsys.readouterr().err.strip())["error"]
    rc = main(["eval", "--pred", str(tmp_path / "p.jsonl"),
               "--out", str(tmp_path / "r.json")])
    assert rc == 2


def test_partition_cli(tmp_path, capsys):
    gold = tmp_path / "gold.jsonl"
    doc = "t0 t1 t2 t3 t4 t5 t6 t7"
    records = []
    for i in range(6):
        matched = [f"t{j}" for j in range(i + 1)]
        fillers = [f"x{i}y{j}" for j in range(8 - len(matched))]
        records.append({
            "example_id": f"g{i}",
            "gold": "consistent" if i % 2 == 0 else "inconsistent",
            "premise": doc,
            "hypothesis": " ".join(matched + fillers),
        })
    _write_jsonl(gold, records)
    pred = tmp_path / "p.jsonl"
    _write_jsonl(pred, [{"example_id": f"g{i}", "score": 0.9 if i % 2 == 0 else 0.1}
                        for i in range(6)])
    out = tmp_path / "bins.json"
    _run(["partition", "--gold", gold, "--pred", pred, "--k", 3, "--out", out])
    report = json.loads(out.read_text())
    assert report["k"] == 3 and report["total"] == 6
    assert [b["size"] for b in report["bins"]] == [2, 2, 2]
    medians = [b["median_overlap"] for b in report["bins"]]
    assert medians == sorted(medians)
    assert all(b["metrics"]["p.jsonl"] == 1.0 for b in report["bins"])
    assert "median_overlap" in capsys.readouterr().out
