"""Command-line pipeline driver.

Every stage writes its outputs plus a ``<stage>.manifest.json`` holding
input/output digests, the seed, and counters, so reruns can be compared
byte-for-byte. Shared flags can also come from the environment with the
``FALSESUM_`` prefix (FALSESUM_SEED, FALSESUM_JOBS, FALSESUM_SPLIT,
FALSESUM_FORCE_CODE, FALSESUM_THRESHOLD, FALSESUM_K); explicit flags win.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .bridge import mock_generate, read_generation_output, write_generation_batch
from .corpus import load_corpus
from .errors import PipelineError, UsageError
from .formatting import (
    CODES,
    DEFAULT_TRAIN_FRACTION,
    SkipUnit,
    make_example,
    unit_mode,
)
from .jsonl import read_jsonl, write_jsonl
from .metrics import (
    EvalRecord,
    RankCandidate,
    RankInstance,
    aggregate_consistency,
    balanced_accuracy,
    mean_over_seeds,
    normalize_gold,
    partition_by_overlap,
    precision_at_1,
)
from .nli import (
    ablate,
    emit_nli,
    example_from_json,
    hypothesis_only,
    merge_for_augmentation,
    sample_examples,
)
from .relations import MAX_SENTENCES, extract_tuples, span_text
from .seeding import derive_rng

ENV_PREFIX = "FALSESUM_"
DEFAULT_SEED = 11


def _env(name: str, cast, fallback):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError:
        raise UsageError(f"cannot parse {ENV_PREFIX}{name}={raw!r}") from None


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(stage: str, out_dir: Path, seed: int | None,
                    inputs: list[Path], outputs: list[Path], counts: dict) -> Path:
    manifest = {
        "stage": stage,
        "seed": seed,
        "inputs": {p.name: _sha256(p) for p in inputs},
        "outputs": {p.name: _sha256(p) for p in outputs},
        "counts": counts,
    }
    path = out_dir / f"{stage}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _corpus_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--documents", required=True, help="documents JSONL (doc_id, text)")
    parser.add_argument("--summaries", required=True, help="summaries JSONL (doc_id, sentences)")
    parser.add_argument("--parses", required=True, help="directory of <doc_id>.conllu files")


def _seed_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=_env("SEED", int, DEFAULT_SEED),
                        help=f"master seed (default {DEFAULT_SEED})")


# --- stages -----------------------------------------------------------------

def _stage_ingest(args) -> dict:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    units, skips = load_corpus(args.documents, args.summaries, args.parses)
    skip_path = out_dir / "skip_report.jsonl"
    write_jsonl(skip_path, (s.to_json() for s in skips))
    counts = {
        "units": len(units),
        "documents": len({u.doc_id for u in units}),
        "skips": len(skips),
    }
    _write_manifest(
        "ingest", out_dir, None,
        [Path(args.documents), Path(args.summaries)], [skip_path], counts,
    )
    return counts


def _stage_extract(args) -> dict:
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    units, _skips = load_corpus(args.documents, args.summaries, args.parses)
    documents = {}
    for unit in units:
        documents.setdefault(unit.doc_id, unit.document)

    rows = []
    for doc_id in sorted(documents):
        document = documents[doc_id]
        for sentence in document.sentences[:MAX_SENTENCES]:
            for tup in extract_tuples(sentence, origin="document"):
                rows.append(
                    {
                        "doc_id": doc_id,
                        "sent_index": sentence.sent_index,
                        "pred": span_text(tup.predicate, sentence),
                        "args": [span_text(arg, sentence) for arg in tup.arguments],
                    }
                )
    write_jsonl(out_path, rows)
    counts = {"documents": len(documents), "tuples": len(rows)}
    _write_manifest(
        "extract", out_path.parent, None,
        [Path(args.documents), Path(args.summaries)], [out_path], counts,
    )
    return counts


def _format_one(payload):
    unit, mode, seed, force_code = payload
    try:
        example, stats = make_example(unit, mode, seed, force_code)
        return ("ok", mode, example.to_json(), stats)
    except SkipUnit as skip:
        report = {"doc_id": unit.doc_id, "reason": f"{skip.reason}:{unit.summary_index}"}
        return ("skip", mode, report, {})


def _stage_format(args) -> dict:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.force_code and args.force_code not in CODES:
        raise UsageError(f"--force-code must be one of {CODES}, got {args.force_code!r}")
    if not 0.0 <= args.split <= 1.0:
        raise UsageError(f"--split must be in [0, 1], got {args.split}")

    units, corpus_skips = load_corpus(args.documents, args.summaries, args.parses)
    payloads = [
        (unit, unit_mode(args.seed, unit.doc_id, unit.summary_index, args.split),
         args.seed, args.force_code or None)
        for unit in units
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_format_one, payloads, chunksize=8))
    else:
        results = [_format_one(p) for p in payloads]

    train_rows, test_rows, skip_rows = [], [], []
    totals = {"missing_lemma": 0, "reduced_spans": 0}
    for status, mode, payload, stats in results:
        for key in totals:
            totals[key] += stats.get(key, 0)
        if status == "skip":
            skip_rows.append(payload)
        elif mode == "train":
            train_rows.append(payload)
        else:
            test_rows.append(payload)

    train_path = out_dir / "train.jsonl"
    test_path = out_dir / "test.jsonl"
    skip_path = out_dir / "skip_report.jsonl"
    write_jsonl(train_path, train_rows)
    write_jsonl(test_path, test_rows)
    write_jsonl(skip_path, [s.to_json() for s in corpus_skips] + skip_rows)

    counts = {
        "units": len(units),
        "train": len(train_rows),
        "test": len(test_rows),
        "skipped_units": len(skip_rows),
        "corpus_skips": len(corpus_skips),
        **totals,
    }
    _write_manifest(
        "format", out_dir, args.seed,
        [Path(args.documents), Path(args.summaries)],
        [train_path, test_path, skip_path], counts,
    )
    return counts


def _stage_mock_generate(args) -> dict:
    gen_in = Path(args.gen_in)
    gen_out = Path(args.gen_out)
    gen_out.parent.mkdir(parents=True, exist_ok=True)
    gen_in.parent.mkdir(parents=True, exist_ok=True)

    test_records = [rec for _ln, rec in read_jsonl(args.test_file)]
    write_generation_batch(test_records, gen_in)

    outputs = []
    for rec in test_records:
        rng = derive_rng(args.seed, rec["doc_id"], rec["summary_index"], "mock")
        outputs.append(mock_generate(rec, rng).to_json())
    write_jsonl(gen_out, outputs)

    counts = {"examples": len(test_records)}
    _write_manifest(
        "mock-generate", gen_out.parent, args.seed,
        [Path(args.test_file)], [gen_in, gen_out], counts,
    )
    return counts


def _stage_emit(args) -> dict:
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    rejects_path = Path(args.rejects) if args.rejects else out_path.parent / "generation_rejects.jsonl"

    units, _skips = load_corpus(args.documents, args.summaries, args.parses)
    known = {(u.doc_id, u.summary_index) for u in units}
    generations, rejects = read_generation_output(args.generations, known_ids=known)
    write_jsonl(rejects_path, rejects)

    examples = emit_nli(units, generations)
    write_jsonl(out_path, (e.to_json() for e in examples))
    counts = {
        "units": len(units),
        "generations": len(generations),
        "rejected_generations": len(rejects),
        "examples": len(examples),
    }
    _write_manifest(
        "emit", out_path.parent, None,
        [Path(args.generations)], [out_path, rejects_path], counts,
    )
    return counts


def _load_nli(path: str) -> list:
    return [example_from_json(rec, where=f"{path}: line {line_no}")
            for line_no, rec in read_jsonl(path)]


def _stage_ablate(args) -> dict:
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    examples = _load_nli(args.infile)
    kept = ablate(examples, args.variant, args.seed)
    write_jsonl(out_path, (e.to_json() for e in kept))
    counts = {"in": len(examples), "out": len(kept), "variant": args.variant}
    _write_manifest("ablate", out_path.parent, args.seed,
                    [Path(args.infile)], [out_path], counts)
    return counts


def _stage_sample(args) -> dict:
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    examples = _load_nli(args.infile)
    kept = sample_examples(examples, args.n, args.seed)
    write_jsonl(out_path, (e.to_json() for e in kept))
    counts = {"in": len(examples), "out": len(kept)}
    _write_manifest("sample", out_path.parent, args.seed,
                    [Path(args.infile)], [out_path], counts)
    return counts


def _stage_probe(args) -> dict:
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    examples = _load_nli(args.infile)
    write_jsonl(out_path, (e.to_json() for e in hypothesis_only(examples)))
    counts = {"examples": len(examples)}
    _write_manifest("probe", out_path.parent, None,
                    [Path(args.infile)], [out_path], counts)
    return counts


def _stage_merge(args) -> dict:
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    written = merge_for_augmentation(args.base, args.falsesum, args.seed, out_path)
    counts = {"examples": written}
    _write_manifest("merge", out_path.parent, args.seed,
                    [Path(args.base), Path(args.falsesum)], [out_path], counts)
    return counts


def _load_predictions(path: str) -> dict[str, float]:
    """Prediction file: {"example_id", "score"} or {"example_id", "scores"}
    where scores is a sentence-pair matrix aggregated by max-entailment."""
    scores: dict[str, float] = {}
    for line_no, rec in read_jsonl(path):
        if "example_id" not in rec:
            raise UsageError(f"{path}: line {line_no}: missing example_id")
        if "score" in rec:
            scores[rec["example_id"]] = float(rec["score"])
        elif "scores" in rec:
            scores[rec["example_id"]] = aggregate_consistency(rec["scores"])
        else:
            raise UsageError(f"{path}: line {line_no}: need score or scores")
    return scores


def _load_gold(path: str) -> list[dict]:
    records = []
    for line_no, rec in read_jsonl(path):
        for field in ("example_id", "gold"):
            if field not in rec:
                raise UsageError(f"{path}: line {line_no}: missing {field!r}")
        records.append(rec)
    return records


def _load_ranking(path: str) -> list[RankInstance]:
    instances = []
    for line_no, rec in read_jsonl(path):
        if "instance_id" not in rec or "candidates" not in rec:
            raise UsageError(f"{path}: line {line_no}: need instance_id and candidates")
        candidates = tuple(
            RankCandidate(summary_id=int(c["summary_id"]),
                          consistent=bool(c["consistent"]),
                          score=float(c["score"]))
            for c in rec["candidates"]
        )
        instances.append(RankInstance(instance_id=str(rec["instance_id"]),
                                      candidates=candidates))
    return instances


def _render_table(header: list[str], rows: list[list[str]]) -> str:
    table = [header] + rows
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = []
    for r, row in enumerate(table):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if r == 0:
            lines.append("  ".join("-" * widths[i] for i in range(len(header))))
    return "\n".join(lines)


def _fmt(value) -> str:
    if value is None:
        return "n/a"
    return f"{value:.4f}"


def _stage_eval(args) -> dict:
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if not args.pred and not args.rank:
        raise UsageError("eval needs at least one --pred file or a --rank file")

    report: dict = {}
    per_file: dict[str, dict] = {}
    if args.pred:
        gold = _load_gold(args.gold) if args.gold else None
        if gold is None:
            raise UsageError("--pred evaluation needs --gold")
        for pred_path in args.pred:
            scores = _load_predictions(pred_path)
            records = []
            for rec in gold:
                if rec["example_id"] not in scores:
                    raise UsageError(
                        f"{pred_path}: missing prediction for {rec['example_id']!r}"
                    )
                records.append(EvalRecord(rec["example_id"], normalize_gold(rec["gold"]),
                                          scores[rec["example_id"]]))
            per_file[Path(pred_path).name] = {
                "balanced_accuracy": balanced_accuracy(records, args.threshold)
            }
        report["per_file"] = per_file
        if len(per_file) > 1:
            report["aggregate"] = mean_over_seeds(list(per_file.values()))
    if args.rank:
        report["precision_at_1"] = precision_at_1(_load_ranking(args.rank))

    out_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    rows = [[name, _fmt(metrics["balanced_accuracy"])] for name, metrics in per_file.items()]
    if "aggregate" in report:
        agg = report["aggregate"]["balanced_accuracy"]
        rows.append(["mean", _fmt(agg["mean"])])
    if "precision_at_1" in report:
        rows.append(["precision@1", _fmt(report["precision_at_1"])])
    print(_render_table(["predictions", "metric"], rows))

    inputs = [Path(p) for p in ([args.gold] if args.gold else [])] + [Path(p) for p in args.pred]
    if args.rank:
        inputs.append(Path(args.rank))
    _write_manifest("eval", out_path.parent, None, inputs, [out_path],
                    {"prediction_files": len(args.pred)})
    return {"prediction_files": len(args.pred)}


def _stage_partition(args) -> dict:
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    gold = _load_gold(args.gold)
    for rec in gold:
        for field in ("premise", "hypothesis"):
            if field not in rec:
                raise UsageError(f"{args.gold}: record {rec['example_id']!r} missing {field!r}")
    predictions = {Path(p).name: _load_predictions(p) for p in args.pred}
    report = partition_by_overlap(gold, k=args.k, predictions=predictions,
                                  threshold=args.threshold)
    out_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    header = ["bin", "size", "median_overlap"] + list(predictions)
    rows = []
    for b, entry in enumerate(report["bins"]):
        row = [str(b), str(entry["size"]), _fmt(entry["median_overlap"])]
        row += [_fmt(entry["metrics"][name]) for name in predictions]
        rows.append(row)
    print(_render_table(header, rows))

    _write_manifest("partition", out_path.parent, None,
                    [Path(args.gold)] + [Path(p) for p in args.pred], [out_path],
                    {"records": report["total"], "k": args.k})
    return {"records": report["total"]}


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="falsesum",
        description="Build and evaluate document-level NLI data from summarization corpora.",
        epilog="Shared flags also read FALSESUM_SEED, FALSESUM_JOBS, FALSESUM_SPLIT, "
               "FALSESUM_FORCE_CODE, FALSESUM_THRESHOLD, FALSESUM_K from the environment.",
    )
    sub = parser.add_subparsers(dest="stage", required=True)

    p = sub.add_parser("ingest", help="validate corpus inputs and report skips")
    _corpus_args(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_stage_ingest)

    p = sub.add_parser("extract", help="dump predicate-argument tuples per document")
    _corpus_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_stage_extract)

    p = sub.add_parser("format", help="build control-coded seq2seq examples")
    _corpus_args(p)
    p.add_argument("--out-dir", required=True)
    _seed_arg(p)
    p.add_argument("--jobs", type=int, default=_env("JOBS", int, 1),
                   help="parallel formatting workers (default 1)")
    p.add_argument("--split", type=float, default=_env("SPLIT", float, DEFAULT_TRAIN_FRACTION),
                   help=f"train fraction (default {DEFAULT_TRAIN_FRACTION})")
    p.add_argument("--force-code", default=_env("FORCE_CODE", str, ""),
                   help="force every example to one control code")
    p.set_defaults(func=_stage_format)

    p = sub.add_parser("mock-generate", help="fill masks from the input lists (no model)")
    p.add_argument("--test-file", required=True)
    p.add_argument("--gen-in", required=True, help="generation batch file to write")
    p.add_argument("--gen-out", required=True, help="generation output file to write")
    _seed_arg(p)
    p.set_defaults(func=_stage_mock_generate)

    p = sub.add_parser("emit", help="pair generations with units into NLI examples")
    _corpus_args(p)
    p.add_argument("--generations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rejects", default="", help="rejected-generation report path")
    p.set_defaults(func=_stage_emit)

    p = sub.add_parser("ablate", help="dataset ablations")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--variant", required=True,
                   help="-contrastive, -intrinsic, or -extrinsic")
    _seed_arg(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_stage_ablate)

    p = sub.add_parser("sample", help="uniform sample without replacement")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--n", type=int, required=True)
    _seed_arg(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_stage_sample)

    p = sub.add_parser("probe", help="hypothesis-only variant (blank premises)")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_stage_probe)

    p = sub.add_parser("merge", help="merge a 3-class base NLI set with ours")
    p.add_argument("--base", required=True)
    p.add_argument("--falsesum", required=True)
    _seed_arg(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_stage_merge)

    p = sub.add_parser("eval", help="balanced accuracy / precision@1 reports")
    p.add_argument("--gold", default="")
    p.add_argument("--pred", action="append", default=[])
    p.add_argument("--rank", default="")
    p.add_argument("--threshold", type=float, default=_env("THRESHOLD", float, 0.5))
    p.add_argument("--out", required=True)
    p.set_defaults(func=_stage_eval)

    p = sub.add_parser("partition", help="quantile bins by document-summary overlap")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", action="append", default=[])
    p.add_argument("--k", type=int, default=_env("K", int, 5))
    p.add_argument("--threshold", type=float, default=_env("THRESHOLD", float, 0.5))
    p.add_argument("--out", required=True)
    p.set_defaults(func=_stage_partition)

    return parser


def run_stage(argv: list[str]) -> int:
    """Parse argv, run one stage, return an exit status."""
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        counts = args.func(args)
    except PipelineError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(json.dumps({"error": f"missing input file: {exc.filename}"}), file=sys.stderr)
        return 2
    print(json.dumps({"stage": args.stage, "counts": counts}))
    return 0


def main(argv: list[str] | None = None) -> int:
    return run_stage(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
