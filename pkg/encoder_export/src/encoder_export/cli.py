"""Command line entry point: export-embeddings.

Exit codes follow the pipeline CLI convention: 0 on success, 1 on
validation errors (bad corpus records, unloadable encoder), 2 on I/O
errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from encoder_export.errors import ExportError
from encoder_export.exporter import POOLINGS, export_corpus


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="export-embeddings",
        description="Run a frozen pretrained encoder over a tokenized corpus "
        "and write per-token vectors as a PCXE embedding file.",
    )
    parser.add_argument("--corpus", required=True, help="corpus JSONL file")
    parser.add_argument(
        "--model", required=True, help="encoder checkpoint name or directory"
    )
    parser.add_argument(
        "--pool",
        choices=POOLINGS,
        default="mean",
        help="how to pool a token's subword pieces (default: mean)",
    )
    parser.add_argument("--out", required=True, help="output PCXE path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        report = export_corpus(args.corpus, args.model, args.out, pooling=args.pool)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    print(
        f"wrote {len(report.written)} sentence records "
        f"(dim {report.dim}, {report.pooling} pooling) to {report.path}"
    )
    if report.skipped:
        print(f"skipped {len(report.skipped)} over-length sentences: "
              + ", ".join(report.skipped))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
