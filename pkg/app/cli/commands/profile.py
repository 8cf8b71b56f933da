"""
profile

Per-design g-cell, hotspot and partition counts of a split.
"""

import argparse
from pathlib import Path

from app.cli.common import common_parser, load_split
from app.core.dataset import profile
from app.core.storage import atomic_write_text, write_run_manifest

NAME = "profile"


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser(NAME, parents=[common_parser()], help="Write the design profile table (Markdown)")
    parser.add_argument("--manifest", type=Path, required=True)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    loaded = load_split(args.manifest)
    table = profile(loaded.result).to_markdown()
    atomic_write_text(args.out, table)
    print(table, end="")
    write_run_manifest(args.out, NAME, {}, inputs=loaded.inputs, outputs=[args.out])
    return 0
