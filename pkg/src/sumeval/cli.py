"""Command-line entry point: ``sumeval {ingest,summarize,evaluate,report,all}``."""

import argparse
import logging
import sys

from .gateway import CACHE_MODES
from .pipeline import STAGES, run_pipeline


def parse_args(argv=None):
    parser = argparse.ArgumentParser(
        prog="sumeval",
        description="Summarization evaluation harness (ROUGE, BERTScore, QA and fact-checking consistency)",
    )
    parser.add_argument("command", choices=STAGES + ("all",), help="stage to run, or 'all'")
    parser.add_argument("--config", required=True, help="path to the INI run config")
    parser.add_argument("--systems", help="comma-separated system ids (overrides [run] systems)")
    parser.add_argument("--metrics", help="comma-separated metric names to compute/report")
    parser.add_argument("--cache-mode", choices=CACHE_MODES, help="LLM cache mode")
    parser.add_argument("--out", help="output directory (overrides [run] output_dir)")
    parser.add_argument("--min-words", type=int, help="minimum article length in words")
    parser.add_argument("--max-words", type=int, help="maximum article length in words")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    overrides = {
        "systems": args.systems,
        "metrics": args.metrics,
        "cache_mode": args.cache_mode,
        "out": args.out,
        "min_words": args.min_words,
        "max_words": args.max_words,
    }
    stages = STAGES if args.command == "all" else (args.command,)
    return run_pipeline(args.config, stages, overrides)


if __name__ == "__main__":
    sys.exit(main())
