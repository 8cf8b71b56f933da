"""
rf-train

Train the random forest comparison model on the training part of a split.
"""

import argparse
from pathlib import Path

from app.ai.random_forest import rf_train, save_forest
from app.cli.common import common_parser, load_split, resolve_threads, seed_override, timed
from app.core.storage import atomic_write_bytes, write_run_manifest
from app.models.schemas import RfConfig, load_config

NAME = "rf-train"


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser(NAME, parents=[common_parser()], help="Train a random forest model")
    parser.add_argument("--manifest", type=Path, required=True)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    cfg = load_config(RfConfig, args.config, seed=seed_override(args))
    loaded = load_split(args.manifest)
    timing: dict = {}
    with timed("training", timing):
        forest = rf_train(loaded.result.train, cfg, threads=resolve_threads(args))
    atomic_write_bytes(args.out, save_forest(forest))
    print(f"{len(forest.trees)} tree(s) over {forest.num_features} features -> {args.out}")
    write_run_manifest(
        args.out, NAME, {"rf_config": cfg.model_dump(mode="json")},
        inputs=[*loaded.inputs, *([args.config] if args.config else [])], outputs=[args.out],
        extra={"timing": timing},
    )
    return 0
