"""
predict

Score samples with an ensemble or forest model file.
"""

import argparse
from pathlib import Path

from app.cli.common import common_parser, load_samples, load_scorer, score, timed, write_scores_csv
from app.core.storage import atomic_write_text, write_run_manifest

NAME = "predict"


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser(NAME, parents=[common_parser()], help="Write a score CSV")
    parser.add_argument("--model", type=Path, required=True)
    parser.add_argument("--samples", type=Path, nargs="+", required=True)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    model = load_scorer(args.model)
    samples = load_samples(args.samples)
    timing: dict = {}
    with timed("prediction", timing):
        scores = score(model, samples)
    atomic_write_text(args.out, write_scores_csv(samples, scores))
    print(f"{len(samples)} scores -> {args.out}")
    write_run_manifest(
        args.out, NAME, {}, inputs=[args.model, *args.samples], outputs=[args.out], extra={"timing": timing},
    )
    return 0
