"""
train

Train an NN ensemble on the training part of a split.
"""

import argparse
from pathlib import Path

from app.ai.ensemble import save_model, train
from app.cli.common import common_parser, load_split, resolve_threads, seed_override, timed
from app.core.storage import atomic_write_bytes, write_run_manifest
from app.models.schemas import ExperimentMatrix, MatrixConfig, TrainConfig, load_config

NAME = "train"
SETTINGS = ("setting1", "setting2", "setting3", "setting4")


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser(NAME, parents=[common_parser()], help="Train an NN ensemble model")
    parser.add_argument("--manifest", type=Path, required=True)
    parser.add_argument(
        "--setting", choices=SETTINGS, default=None,
        help="Apply a model-settings row (voters / selection mode / subset size) on top of --config",
    )
    parser.add_argument("--num-voters", type=int, default=100, help="Voters for --setting 2-4")
    parser.add_argument("--subset-size", type=int, default=20, help="Subset size for --setting 3-4")
    parser.set_defaults(handler=run)


def resolve_train_config(args: argparse.Namespace) -> TrainConfig:
    cfg = load_config(TrainConfig, args.config, seed=seed_override(args))
    if args.setting:
        matrix = ExperimentMatrix.from_config(
            MatrixConfig(train=cfg, num_voters=args.num_voters, subset_size=args.subset_size)
        )
        cfg = matrix.settings[args.setting]
    return cfg


def run(args: argparse.Namespace) -> int:
    cfg = resolve_train_config(args)
    loaded = load_split(args.manifest)
    timing: dict = {}
    with timed("training", timing):
        model = train(loaded.result.train, cfg, threads=resolve_threads(args))
    atomic_write_bytes(args.out, save_model(model))
    print(f"{model.num_voters} voter(s), final epoch loss {model.meta['final_epoch_loss']:.6f} -> {args.out}")
    write_run_manifest(
        args.out, NAME, {"train_config": cfg.model_dump(mode="json"), "setting": args.setting},
        inputs=[*loaded.inputs, *([args.config] if args.config else [])], outputs=[args.out],
        extra={"timing": timing},
    )
    return 0
