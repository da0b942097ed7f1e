"""Command-line entry point.

Subcommands: train, predict, evaluate, augment, sweep, export-iob2,
import-iob2. Exit codes: 0 on success, 1 on validation errors (bad
corpus, bad flag values, mismatched models), 2 on I/O errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from picospan import augment, pipeline
from picospan.corpus import (
    export_iob2,
    import_iob2,
    load_corpus,
    save_corpus,
)
from picospan.errors import PicospanError
from picospan.evaluator import evaluate, evaluate_grouped
from picospan.optim import TrainConfig

logger = logging.getLogger(__name__)


def _load_pipeline_config(args: argparse.Namespace) -> pipeline.PipelineConfig:
    """Config file first, then explicit flags override individual fields."""
    base: dict = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as handle:
            base = json.load(handle)
    config = pipeline.PipelineConfig.from_dict(base)
    if getattr(args, "threshold", None) is not None:
        config.threshold = args.threshold
    if getattr(args, "tau", None) is not None:
        config.tau = args.tau
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
        config.train = TrainConfig(
            learning_rate=config.train.learning_rate,
            batch_size=config.train.batch_size,
            epochs=config.train.epochs,
            seed=args.seed,
            optimizer=config.train.optimizer,
        )
    if getattr(args, "no_augment", False):
        config.augmentation = False
    config.__post_init__()  # revalidate after overrides
    return config


def _cmd_train(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    config = _load_pipeline_config(args)
    init = None
    if args.init_from:
        init = pipeline.load_models(args.init_from)
        config.embedder = init.embedder.config()
    models = pipeline.train_all(
        corpus, config, embedder=init.embedder if init else None, init=init
    )
    pipeline.save_models(args.out, models, config)
    logger.info("models written to %s", args.out)
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    models = pipeline.load_models(args.models, embeddings_path=args.embeddings)
    config = _load_pipeline_config(args)
    predictions = pipeline.predict_corpus(corpus, models, config)
    with open(args.out, "w", encoding="utf-8") as handle:
        pipeline.write_predictions(predictions, handle)
    total = sum(len(v) for v in predictions.values())
    logger.info("%d spans over %d sentences -> %s", total, len(predictions), args.out)
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    gold = load_corpus(args.gold)
    with open(args.pred, "r", encoding="utf-8") as handle:
        predictions = pipeline.load_predictions(handle)
    if args.group:
        report = evaluate_grouped(predictions, gold, args.group)
    else:
        report = evaluate(predictions, gold)
    payload = report.to_dict()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2)
            handle.write("\n")
    else:
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


def _cmd_augment(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    n = 0
    with open(args.out, "w", encoding="utf-8") as handle:
        for sentence in corpus.sentences():
            for span in augment.sentence_negatives(sentence):
                record = {
                    "uid": sentence.uid,
                    "start": span.start,
                    "end": span.end,
                    "category": "NONE",
                }
                handle.write(json.dumps(record) + "\n")
                n += 1
    logger.info("%d composite negatives -> %s", n, args.out)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    models = pipeline.load_models(args.models, embeddings_path=args.embeddings)
    config = _load_pipeline_config(args)
    try:
        thresholds = [float(x) for x in args.thresholds.split(",") if x.strip()]
    except ValueError:
        raise PicospanError(f"bad threshold list {args.thresholds!r}") from None
    if not thresholds:
        raise PicospanError("empty threshold list")
    points = pipeline.sweep_threshold(corpus, models, thresholds, config)
    with open(args.out, "w", encoding="utf-8") as handle:
        if args.out.endswith(".json"):
            pipeline.write_sweep_json(points, handle)
        else:
            pipeline.write_sweep_csv(points, handle)
    return 0


def _cmd_export_iob2(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write(export_iob2(corpus))
    return 0


def _cmd_import_iob2(args: argparse.Namespace) -> int:
    with open(args.input, "r", encoding="utf-8") as handle:
        corpus = import_iob2(handle, doc_id=args.doc_id)
    save_corpus(corpus, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="picospan",
        description="Two-stage overlapping span extraction over token embeddings.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train boundary and category heads")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="directory for model files")
    p.add_argument("--config", help="JSON file of pipeline settings")
    p.add_argument("--seed", type=int)
    p.add_argument("--no-augment", action="store_true", help="skip composite negatives")
    p.add_argument("--init-from", help="model directory to continue training from")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="extract spans from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="JSON file of pipeline settings")
    p.add_argument("--threshold", type=float, help="boundary threshold in (0, 0.5]")
    p.add_argument("--tau", type=float, help="category decision threshold in (0, 1)")
    p.add_argument("--embeddings", help="precomputed embedding file (for pcxe models)")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold spans")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--group", choices=["overlap", "length"])
    p.add_argument("--out", help="report JSON path (default: stdout)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("augment", help="emit composite negative spans")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("sweep", help="precision/recall across boundary thresholds")
    p.add_argument("--corpus", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--thresholds", default="0.2,0.25,0.3,0.4,0.5")
    p.add_argument("--out", required=True, help=".csv or .json output path")
    p.add_argument("--config", help="JSON file of pipeline settings")
    p.add_argument("--tau", type=float)
    p.add_argument("--embeddings", help="precomputed embedding file (for pcxe models)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("export-iob2", help="corpus JSONL to IOB2 tags")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_iob2)

    p = sub.add_parser("import-iob2", help="IOB2 tags to corpus JSONL")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--doc-id", default="doc")
    p.set_defaults(func=_cmd_import_iob2)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except PicospanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
