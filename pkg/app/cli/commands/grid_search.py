"""
grid-search

Train every configuration of a hyperparameter grid and pick the best on the
validation set.
"""

import argparse
from pathlib import Path

from app.ai.experiments import grid_search, grid_table_csv
from app.ai.metrics import format_metric
from app.cli.common import common_parser, load_split, resolve_threads, seed_override, timed
from app.core.storage import atomic_write_bytes, atomic_write_text, canonical_json, write_run_manifest
from app.models.schemas import GridSpec, load_config

NAME = "grid-search"


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser(
        NAME, parents=[common_parser()],
        help="Rank a hyperparameter grid on the validation set; --out is a directory",
    )
    parser.add_argument("--manifest", type=Path, required=True)
    parser.add_argument("--metric", choices=("a_roc", "acc_e", "a_prc"), default=None)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    spec = load_config(GridSpec, args.config, metric=args.metric)
    seed = seed_override(args)
    if seed is not None:
        spec = spec.model_copy(update={"base": spec.base.model_copy(update={"seed": seed})})
    loaded = load_split(args.manifest)

    timing: dict = {}
    with timed("grid search", timing):
        rows, best = grid_search(loaded.result.train, loaded.result.valid, spec, threads=resolve_threads(args))

    table_path = atomic_write_text(args.out / "grid.csv", grid_table_csv(rows))
    best_path = atomic_write_bytes(args.out / "best_config.json", canonical_json(best.model_dump(mode="json")))
    top = rows[0]
    print(
        f"best: lr={top.learning_rate:g} epochs={top.epochs} m={top.num_voters} n={top.subset_size} "
        f"{spec.metric}={format_metric(getattr(top, spec.metric))} -> {best_path}"
    )
    write_run_manifest(
        args.out, NAME, {"grid": spec.model_dump(mode="json")},
        inputs=[*loaded.inputs, *([args.config] if args.config else [])],
        outputs=[table_path, best_path], extra={"timing": timing},
    )
    return 0
