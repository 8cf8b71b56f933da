"""
split

Partition sample files into train / validation / per-design test sets and
write the split manifest.
"""

import argparse
import os
from pathlib import Path

from app.cli.common import common_parser, load_samples, seed_override
from app.core.dataset import build_manifest, split
from app.core.storage import atomic_write_bytes, canonical_json, sha256_file, write_run_manifest
from app.models.schemas import SampleFileRef, SplitSpec, load_config

NAME = "split"


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser(NAME, parents=[common_parser()], help="Write a split manifest")
    parser.add_argument("--samples", type=Path, nargs="+", required=True)
    parser.add_argument("--holdout", nargs="*", default=None, help="Designs whose samples all go to testing")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    spec = load_config(SplitSpec, args.config, seed=seed_override(args), holdout_designs=args.holdout)
    samples = load_samples(args.samples)
    result = split(samples, spec)

    out_dir = args.out.resolve().parent
    sources = [
        SampleFileRef(path=os.path.relpath(path.resolve(), out_dir), sha256=sha256_file(path))
        for path in args.samples
    ]
    manifest = build_manifest(result, sources)
    atomic_write_bytes(args.out, canonical_json(manifest.model_dump(mode="json")))
    print(
        f"train {len(result.train)} / valid {len(result.valid)} / "
        f"test {sum(len(t) for t in result.tests.values())} across {len(result.tests)} design(s) -> {args.out}"
    )
    write_run_manifest(
        args.out, NAME, {"spec": spec.model_dump(mode="json")},
        inputs=[*args.samples, *([args.config] if args.config else [])], outputs=[args.out],
    )
    return 0
