"""
gen-synth

Write synthetic layouts and DRC reports: one design, or a seeded suite of
jittered designs.
"""

import argparse
import json

from app.cli.common import common_parser, seed_override
from app.core.layout import write_drc, write_layout
from app.core.storage import atomic_write_bytes, write_run_manifest
from app.core.synth import generate_design, generate_suite_designs
from app.models.schemas import SynthConfig, load_config

NAME = "gen-synth"


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser(
        NAME,
        parents=[common_parser()],
        help="Generate synthetic layout + DRC files into the --out directory",
    )
    parser.add_argument("--designs", type=int, default=1, help="Number of designs (suite when > 1)")
    parser.add_argument("--name", default="synth", help="Design name for a single design")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    cfg = load_config(SynthConfig, args.config, seed=seed_override(args))
    if args.designs > 1:
        designs = generate_suite_designs(cfg, args.designs, cfg.seed)
    else:
        designs = [generate_design(cfg, name=args.name)]

    outputs = []
    for design in designs:
        layout_path = atomic_write_bytes(args.out / f"{design.name}.layout.json", write_layout(design.grid))
        drc_path = atomic_write_bytes(args.out / f"{design.name}.drc.json", write_drc(design.drc))
        hotspots = sorted([c, r] for c, r in design.hotspots)
        plant_path = atomic_write_bytes(
            args.out / f"{design.name}.hotspots.json",
            (json.dumps(hotspots, separators=(",", ":")) + "\n").encode("utf-8"),
        )
        outputs.extend([layout_path, drc_path, plant_path])
        print(f"{design.name}: {len(design.hotspots)} planted hotspots -> {layout_path}")

    write_run_manifest(
        args.out,
        NAME,
        {"config": cfg.model_dump(mode="json"), "designs": args.designs, "name": args.name},
        inputs=[args.config] if args.config else [],
        outputs=outputs,
    )
    return 0
