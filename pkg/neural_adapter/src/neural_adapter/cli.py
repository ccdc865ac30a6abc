"""Command line front end: train-generator, generate, classify, show-config."""

from __future__ import annotations

import argparse
import json
import sys

from .classifier import train_and_score_classifier
from .configs import ClassifierTrainingConfig, GeneratorTrainingConfig
from .errors import AdapterError
from .generator import generate, train_generator


def _generator_config(args) -> GeneratorTrainingConfig:
    return GeneratorTrainingConfig(
        model_name=args.model_name,
        epochs=args.epochs,
        batch_size=args.batch_size,
        optimizer=args.optimizer,
        learning_rate=args.learning_rate,
        max_source_length=args.max_source_length,
        max_target_length=args.max_target_length,
        seed=args.seed,
        beam_size=args.beam_size,
        min_length=args.min_length,
        max_length=args.max_length,
        repetition_penalty=args.repetition_penalty,
        length_penalty=args.length_penalty,
    )


def _classifier_config(args) -> ClassifierTrainingConfig:
    return ClassifierTrainingConfig(
        model_name=args.model_name,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        max_input_tokens=args.max_input_tokens,
        seeds=tuple(int(s) for s in args.seeds.split(",") if s.strip()),
    )


def _cmd_train_generator(args) -> dict:
    log = train_generator(args.train_file, args.model_dir,
                          config=_generator_config(args),
                          from_scratch=args.from_scratch)
    return {"examples": log["examples"], "steps": len(log["steps"]),
            "first_loss": log["first_loss"], "last_loss": log["last_loss"]}


def _cmd_generate(args) -> dict:
    return generate(args.model_dir, args.batch_file, args.out,
                    shards=args.shards, rejects_file=args.rejects or None)


def _cmd_classify(args) -> dict:
    summary = train_and_score_classifier(
        args.train_file, args.eval, args.out_dir,
        config=_classifier_config(args),
        from_scratch=args.from_scratch,
        sentence_matrix=args.sentence_matrix)
    return {"seeds": summary["seeds"],
            "train_examples": summary["train_examples"],
            "prediction_files": summary["prediction_files"]}


def _cmd_show_config(args) -> dict:
    if args.kind == "generator":
        return GeneratorTrainingConfig().to_json()
    return ClassifierTrainingConfig().to_json()


def _generator_flags(p: argparse.ArgumentParser) -> None:
    d = GeneratorTrainingConfig()
    p.add_argument("--model-name", default=d.model_name)
    p.add_argument("--epochs", type=int, default=d.epochs)
    p.add_argument("--batch-size", type=int, default=d.batch_size)
    p.add_argument("--optimizer", default=d.optimizer)
    p.add_argument("--learning-rate", type=float, default=d.learning_rate)
    p.add_argument("--max-source-length", type=int, default=d.max_source_length)
    p.add_argument("--max-target-length", type=int, default=d.max_target_length)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--beam-size", type=int, default=d.beam_size)
    p.add_argument("--min-length", type=int, default=d.min_length)
    p.add_argument("--max-length", type=int, default=d.max_length)
    p.add_argument("--repetition-penalty", type=float, default=d.repetition_penalty)
    p.add_argument("--length-penalty", type=float, default=d.length_penalty)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="falsesum-neural",
        description="Model-backed generation and consistency scoring over the "
                    "pipeline's JSON Lines files.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-generator", help="fine-tune a seq2seq model")
    p.add_argument("--train-file", required=True)
    p.add_argument("--model-dir", required=True)
    p.add_argument("--from-scratch", action="store_true",
                   help="small random-init model instead of a pretrained checkpoint")
    _generator_flags(p)
    p.set_defaults(func=_cmd_train_generator)

    p = sub.add_parser("generate", help="decode a generation batch file")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--batch-file", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--rejects", default="", help="dropped-record report path")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("classify", help="train per-seed classifiers and score eval sets")
    p.add_argument("--train-file", required=True)
    p.add_argument("--eval", action="append", required=True,
                   help="eval example file; repeatable")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--from-scratch", action="store_true")
    p.add_argument("--sentence-matrix", action="store_true",
                   help="emit per-sentence score matrices instead of scalars")
    d = ClassifierTrainingConfig()
    p.add_argument("--model-name", default=d.model_name)
    p.add_argument("--epochs", type=int, default=d.epochs)
    p.add_argument("--batch-size", type=int, default=d.batch_size)
    p.add_argument("--learning-rate", type=float, default=d.learning_rate)
    p.add_argument("--max-input-tokens", type=int, default=d.max_input_tokens)
    p.add_argument("--seeds", default=",".join(str(s) for s in d.seeds),
                   help="comma-separated training seeds")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("show-config", help="print a default config as JSON")
    p.add_argument("--kind", choices=("generator", "classifier"), required=True)
    p.set_defaults(func=_cmd_show_config)

    return parser


def run_command(argv: list[str]) -> int:
    try:
        import transformers
        transformers.utils.logging.set_verbosity_error()
        transformers.utils.logging.disable_progress_bar()
        parser = build_parser()
        args = parser.parse_args(argv)
        result = args.func(args)
    except AdapterError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(json.dumps({"error": f"missing input file: {exc.filename}"}),
              file=sys.stderr)
        return 2
    print(json.dumps({"command": args.command, "result": result}))
    return 0


def main(argv: list[str] | None = None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
