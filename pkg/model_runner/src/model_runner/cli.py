"""Command-line front end: a JSON config file plus flag overrides."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from .runner import export_predictions, export_tail_verdicts, load_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tailvote-model-runner",
        description="Export model predictions / tail verdicts in tailvote wire formats.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in (("export-predictions", export_predictions),
                       ("export-verdicts", export_tail_verdicts)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="runner config JSON")
        p.add_argument("--dataset", required=True, help="dataset JSONL")
        p.add_argument("--model-path", dest="model_path")
        p.add_argument("--model-id", dest="model_id")
        p.add_argument("--output")
        p.add_argument("--max-input-tokens", dest="max_input_tokens", type=int)
        p.add_argument("--max-output-tokens", dest="max_output_tokens", type=int)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--device")
        p.set_defaults(func=func)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = load_config(
            args.config,
            model_path=args.model_path,
            model_id=args.model_id,
            output=args.output,
            max_input_tokens=args.max_input_tokens,
            max_output_tokens=args.max_output_tokens,
            batch_size=args.batch_size,
            device=args.device,
        )
        args.func(config, args.dataset)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
