"""
matrix

Run the model settings plus the random forest on every test design and
write the comparison table, models, scores and pooled curves.
"""

import argparse
import logging
from pathlib import Path

from app.ai.experiments import run_matrix
from app.ai.metrics import emit_curves
from app.cli.common import common_parser, load_split, resolve_threads, seed_override, write_scores_csv
from app.core.storage import atomic_write_bytes, atomic_write_text, canonical_json, write_run_manifest
from app.models.schemas import MatrixConfig, load_config

logger = logging.getLogger(__name__)

NAME = "matrix"


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser(
        NAME, parents=[common_parser()],
        help="Settings comparison table over every test design; --out is a directory",
    )
    parser.add_argument("--manifest", type=Path, required=True)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    cfg = load_config(MatrixConfig, args.config)
    seed = seed_override(args)
    if seed is not None:
        cfg = cfg.model_copy(update={
            "train": cfg.train.model_copy(update={"seed": seed}),
            "rf": cfg.rf.model_copy(update={"seed": seed}),
        })
    loaded = load_split(args.manifest)
    result = run_matrix(loaded.result, cfg, threads=resolve_threads(args))

    out: Path = args.out
    outputs = [
        atomic_write_text(out / "table.md", result.to_markdown()),
        atomic_write_text(out / "table.csv", result.to_csv()),
    ]
    reports = {}
    for outcome in result.outcomes:
        outputs.append(atomic_write_bytes(out / "models" / f"{outcome.name}.json", outcome.model_bytes()))
        tests = loaded.result.all_tests
        pooled_scores = [s for design in sorted(outcome.scores) for s in outcome.scores[design]]
        outputs.append(atomic_write_text(out / "scores" / f"{outcome.name}.csv", write_scores_csv(tests, pooled_scores)))
        if outcome.pooled.undefined:
            logger.warning("%s: pooled curves skipped, a class is absent from the test sets", outcome.name)
        else:
            outputs.extend(emit_curves(outcome.pooled, out / "curves", prefix=f"{outcome.name}_"))
        reports[outcome.name] = {
            "pooled": outcome.pooled.to_document(),
            "designs": {design: report.to_document() for design, report in outcome.reports.items()},
        }
    outputs.append(atomic_write_bytes(out / "reports.json", canonical_json(reports)))

    print(result.to_markdown(), end="")
    write_run_manifest(
        out, NAME, {"matrix": cfg.model_dump(mode="json")},
        inputs=[*loaded.inputs, *([args.config] if args.config else [])],
        outputs=outputs,
        extra={"timing": {o.name: o.seconds for o in result.outcomes}},
    )
    return 0
