"""
Shared CLI plumbing

Common flags, seed/thread resolution, split loading, score files and model
kind dispatch used by every command module.
"""

import argparse
import csv
import io
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np

from app.ai.ensemble import EnsembleModel, decode_model_bytes
from app.ai.ensemble import from_document as ensemble_from_document
from app.ai.ensemble import predict as ensemble_predict
from app.ai.random_forest import RandomForest, rf_predict
from app.ai.random_forest import from_document as forest_from_document
from app.config import get_settings
from app.core.dataset import SplitResult, resolve_manifest
from app.core.features import Sample, read_samples_jsonl
from app.core.storage import read_bytes, sha256_file
from app.errors import DataError, ModelFormatError, SchemaError, UsageError
from app.models.schemas import SplitManifest, validate_document

logger = logging.getLogger(__name__)

Scorer = Union[EnsembleModel, RandomForest]
SampleKey = tuple[str, int, int]


def common_parser() -> argparse.ArgumentParser:
    """Flags shared by every command."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, default=None, help="Seed overriding the config file")
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument("--out", type=Path, required=True, help="Output path")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    return parser


def seed_override(args: argparse.Namespace) -> Optional[int]:
    """--seed wins; without a config file the settings default applies."""
    if args.seed is not None:
        return args.seed
    if args.config is None:
        return get_settings().default_seed
    return None


def resolve_threads(args: argparse.Namespace) -> int:
    threads = args.threads if args.threads is not None else get_settings().threads
    if threads < 1:
        raise UsageError(f"--threads must be at least 1, got {threads}")
    return threads


@contextmanager
def timed(label: str, sink: dict) -> Iterator[None]:
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    sink[label] = round(elapsed, 3)
    logger.info("%s took %.2fs", label, elapsed)


# ============= Samples and splits =============

def load_samples(paths: list[Path]) -> list[Sample]:
    samples: list[Sample] = []
    for path in paths:
        loaded = read_samples_jsonl(read_bytes(path))
        logger.info("read %d samples from %s", len(loaded), path)
        samples.extend(loaded)
    return samples


@dataclass(frozen=True)
class LoadedSplit:
    manifest: SplitManifest
    result: SplitResult
    inputs: list[Path]


def load_split(manifest_path: Path) -> LoadedSplit:
    """Read a split manifest and every sample file it lists, checking hashes."""
    try:
        document = json.loads(read_bytes(manifest_path))
    except json.JSONDecodeError as e:
        raise DataError(f"{manifest_path}: invalid JSON at byte {e.pos}") from None
    manifest = validate_document(SplitManifest, document)
    base = manifest_path.parent
    paths = []
    for ref in manifest.samples:
        path = Path(ref.path)
        if not path.is_absolute():
            path = base / path
        if path.exists() and sha256_file(path) != ref.sha256:
            raise DataError(f"{path}: contents changed since the split was made")
        paths.append(path)
    result = resolve_manifest(manifest, load_samples(paths))
    return LoadedSplit(manifest=manifest, result=result, inputs=[manifest_path, *paths])


# ============= Score files =============

def write_scores_csv(samples: list[Sample], scores: np.ndarray) -> str:
    """CSV `design,col,row,score,label`, one row per sample."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["design", "col", "row", "score", "label"])
    for sample, score in zip(samples, scores):
        writer.writerow([sample.design_id, sample.gcell[0], sample.gcell[1], repr(float(score)), int(sample.label)])
    return out.getvalue()


def read_scores_csv(path: Path) -> tuple[list[SampleKey], np.ndarray, Optional[np.ndarray]]:
    """(keys, scores, labels or None when the file has no label column)."""
    text = read_bytes(path).decode("utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not {"design", "col", "row", "score"} <= set(reader.fieldnames):
        raise SchemaError(str(path), "expected columns design,col,row,score[,label]")
    has_labels = "label" in reader.fieldnames
    keys, scores, labels = [], [], []
    for lineno, row in enumerate(reader, start=2):
        try:
            keys.append((row["design"], int(row["col"]), int(row["row"])))
            scores.append(float(row["score"]))
            if has_labels:
                labels.append(int(row["label"]) != 0)
        except (TypeError, ValueError) as e:
            raise DataError(f"{path} line {lineno}: {e}") from None
    return keys, np.array(scores, dtype=np.float64), np.array(labels, dtype=bool) if has_labels else None


# ============= Models =============

def load_scorer(path: Path) -> Scorer:
    """Load an ensemble or a forest, dispatching on the file's `kind`."""
    document = decode_model_bytes(read_bytes(path))
    kind = document.get("kind")
    if kind == "nn_ensemble":
        return ensemble_from_document(document)
    if kind == "random_forest":
        return forest_from_document(document)
    raise ModelFormatError(f"{path}: unknown model kind {kind!r}")


def score(model: Scorer, samples: list[Sample] | np.ndarray) -> np.ndarray:
    if isinstance(model, RandomForest):
        return rf_predict(model, samples)
    return ensemble_predict(model, samples)
