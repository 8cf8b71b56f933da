"""
evaluate

Compute Acc_e / A_roc / A_prc for a score file and write the report and
optional ROC / PR curve CSVs.
"""

import argparse
import logging
from pathlib import Path

import numpy as np

from app.ai.metrics import emit_curves, evaluate, format_metric
from app.cli.common import common_parser, load_samples, read_scores_csv
from app.core.storage import atomic_write_bytes, canonical_json, write_run_manifest
from app.errors import DataError, UndefinedMetricError

logger = logging.getLogger(__name__)

NAME = "evaluate"


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser(NAME, parents=[common_parser()], help="Write an evaluation report")
    parser.add_argument("--scores", type=Path, required=True)
    parser.add_argument("--labels", type=Path, nargs="*", default=None, help="Sample files to take labels from")
    parser.add_argument("--curves", type=Path, default=None, help="Directory for roc.csv / pr.csv")
    parser.add_argument("--acc-e-mode", choices=("nearest", "interpolate"), default="nearest")
    parser.set_defaults(handler=run)


def _labels_from_samples(keys, paths: list[Path]) -> np.ndarray:
    by_key = {s.key: s.label for s in load_samples(paths)}
    try:
        return np.array([by_key[key] for key in keys], dtype=bool)
    except KeyError as e:
        raise DataError(f"no label for scored sample {e.args[0]}") from None


def run(args: argparse.Namespace) -> int:
    keys, scores, labels = read_scores_csv(args.scores)
    if args.labels:
        labels = _labels_from_samples(keys, args.labels)
    elif labels is None:
        raise DataError(f"{args.scores} has no label column; pass --labels")

    report = evaluate(scores, labels, acc_e_mode=args.acc_e_mode)
    atomic_write_bytes(args.out, canonical_json(report.to_document()))
    print(
        f"Acc_e {format_metric(report.acc_e)}  A_roc {format_metric(report.a_roc)}  "
        f"A_prc {format_metric(report.a_prc)}  ({report.n_pos} pos / {report.n_neg} neg)"
    )
    outputs = [args.out]
    if report.undefined:
        logger.warning("metrics undefined: %d positive, %d negative samples", report.n_pos, report.n_neg)
    if args.curves:
        if report.undefined:
            write_run_manifest(args.out, NAME, {"acc_e_mode": args.acc_e_mode}, inputs=[args.scores], outputs=outputs)
            raise UndefinedMetricError("refusing to write curves for an undefined report", subset=str(args.scores))
        outputs.extend(emit_curves(report, args.curves))

    write_run_manifest(
        args.out, NAME, {"acc_e_mode": args.acc_e_mode},
        inputs=[args.scores, *(args.labels or [])], outputs=outputs,
    )
    return 0
