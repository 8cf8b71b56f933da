"""
extract

Turn a layout + DRC report into one labelled sample per g-cell.
"""

import argparse
from pathlib import Path

from app.cli.common import common_parser
from app.core.features import extract_design, write_samples_csv, write_samples_jsonl
from app.core.layout import parse_drc, parse_layout
from app.core.storage import atomic_write_bytes, read_bytes, write_run_manifest

NAME = "extract"


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser(NAME, parents=[common_parser()], help="Extract JSON-lines samples")
    parser.add_argument("--layout", type=Path, required=True)
    parser.add_argument("--drc", type=Path, required=True)
    parser.add_argument("--design", default=None, help="Design id (default: layout file stem)")
    parser.add_argument("--csv", type=Path, default=None, help="Also write a CSV copy")
    parser.set_defaults(handler=run)


def design_id_for(layout_path: Path) -> str:
    name = layout_path.name
    for suffix in (".layout.json", ".json"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return layout_path.stem


def run(args: argparse.Namespace) -> int:
    grid = parse_layout(read_bytes(args.layout))
    drc = parse_drc(read_bytes(args.drc))
    design = args.design or design_id_for(args.layout)
    samples = extract_design(grid, drc, design)

    outputs = [atomic_write_bytes(args.out, write_samples_jsonl(samples))]
    if args.csv:
        outputs.append(atomic_write_bytes(args.csv, write_samples_csv(samples)))
    positives = sum(s.label for s in samples)
    print(f"{design}: {len(samples)} samples ({positives} hotspots), {grid.feature_length} features -> {args.out}")

    write_run_manifest(
        args.out, NAME, {"design": design, "csv": args.csv},
        inputs=[args.layout, args.drc], outputs=outputs,
    )
    return 0
