"""Command modules; each exposes `add_parser(subparsers)` and `run(args)`."""

from app.cli.commands import (
    evaluate,
    extract,
    gen_synth,
    grid_search,
    matrix,
    predict,
    profile,
    rf_train,
    split,
    train,
)

COMMANDS = (gen_synth, extract, split, profile, train, rf_train, predict, evaluate, grid_search, matrix)
