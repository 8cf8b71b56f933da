"""
Dataset Partitioning and Normalisation

Per-design random train/validation/test split with holdout designs, and
zero-mean / unit-variance normalisation fitted on the training set only.
"""

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from app.core.features import Sample, stack
from app.core.seeding import derive_rng
from app.errors import ConfigError, DataError, DimensionError
from app.models.schemas import SampleFileRef, SplitManifest, SplitSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitResult:
    train: list[Sample]
    valid: list[Sample]
    tests: dict[str, list[Sample]]

    @property
    def all_tests(self) -> list[Sample]:
        return [s for design in sorted(self.tests) for s in self.tests[design]]


@dataclass(frozen=True, eq=False)
class NormStats:
    """Per-feature training mean and population standard deviation."""
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise DimensionError(f"mean {self.mean.shape} and std {self.std.shape} must be equal-length vectors")
        if (self.std < 0).any():
            raise DataError("standard deviations must be non-negative")

    @property
    def dim(self) -> int:
        return len(self.mean)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NormStats):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.std, other.std)

    __hash__ = None  # type: ignore[assignment]


def _group_by_design(samples: Iterable[Sample]) -> "OrderedDict[str, list[Sample]]":
    groups: OrderedDict[str, list[Sample]] = OrderedDict()
    for sample in samples:
        if not sample.design_id:
            raise DataError(f"sample at {sample.gcell} has no design id")
        groups.setdefault(sample.design_id, []).append(sample)
    return groups


def split_counts(n: int, spec: SplitSpec, holdout: bool) -> tuple[int, int, int]:
    """(train, valid, test) sizes for a design of n samples: floor rounding, remainder to test."""
    if holdout:
        return 0, 0, n
    n_train = math.floor(spec.train_frac * n + 1e-9)
    n_valid = math.floor(spec.valid_frac * n + 1e-9)
    return n_train, n_valid, n - n_train - n_valid


def split(samples: list[Sample], spec: SplitSpec) -> SplitResult:
    """
    Partition samples per design.

    Args:
        samples: Samples of one or more designs
        spec: Fractions, holdout designs and seed

    Returns:
        SplitResult with pooled train/valid and per-design tests
    """
    total = spec.train_frac + spec.valid_frac + spec.test_frac
    if abs(total - 1.0) > 1e-9:
        raise ConfigError(f"split fractions sum to {total!r}, expected 1")

    holdout = set(spec.holdout_designs)
    train: list[Sample] = []
    valid: list[Sample] = []
    tests: dict[str, list[Sample]] = {}
    groups = _group_by_design(samples)
    for design in sorted(groups):
        members = groups[design]
        n_train, n_valid, n_test = split_counts(len(members), spec, design in holdout)
        order = derive_rng(spec.seed, design).permutation(len(members))
        shuffled = [members[i] for i in order]
        train.extend(shuffled[:n_train])
        valid.extend(shuffled[n_train:n_train + n_valid])
        tests[design] = shuffled[n_train + n_valid:]
        logger.info(
            "%s: %d train / %d valid / %d test%s",
            design, n_train, n_valid, n_test, " (holdout)" if design in holdout else "",
        )
    return SplitResult(train=train, valid=valid, tests=tests)


def fit_norm(train: list[Sample] | np.ndarray) -> NormStats:
    """Mean and population std of every feature over the training samples."""
    X = train if isinstance(train, np.ndarray) else stack(train)[0]
    if X.shape[0] == 0:
        raise DataError("cannot fit normalisation on an empty training set")
    if not np.isfinite(X).all():
        raise DataError("training features contain non-finite values")
    std = X.std(axis=0)
    # constant columns can leave rounding residue in std
    std[X.max(axis=0) == X.min(axis=0)] = 0.0
    return NormStats(mean=X.mean(axis=0), std=std)


def apply_norm(stats: NormStats, samples: list[Sample] | np.ndarray) -> np.ndarray:
    """(x - mean) / std per column; zero-variance columns map to 0."""
    X = samples if isinstance(samples, np.ndarray) else stack(samples)[0]
    if X.ndim != 2 or X.shape[1] != stats.dim:
        raise DimensionError(f"expected {stats.dim} features, got shape {X.shape}")
    safe = np.where(stats.std > 0, stats.std, 1.0)
    return np.where(stats.std > 0, (X - stats.mean) / safe, 0.0)


# ============= Manifests =============

def build_manifest(result: SplitResult, sources: Optional[list[SampleFileRef]] = None) -> SplitManifest:
    return SplitManifest(
        samples=sources or [],
        train=[s.key for s in result.train],
        valid=[s.key for s in result.valid],
        tests={design: [s.key for s in members] for design, members in sorted(result.tests.items())},
    )


def resolve_manifest(manifest: SplitManifest, samples: list[Sample]) -> SplitResult:
    """Rebuild a SplitResult from a manifest and the samples it refers to."""
    by_key = {s.key: s for s in samples}

    def lookup(keys) -> list[Sample]:
        try:
            return [by_key[tuple(k)] for k in keys]
        except KeyError as e:
            raise DataError(f"manifest references unknown sample {e.args[0]}") from None

    return SplitResult(
        train=lookup(manifest.train),
        valid=lookup(manifest.valid),
        tests={design: lookup(keys) for design, keys in manifest.tests.items()},
    )


# ============= Profile =============

@dataclass(frozen=True)
class DesignProfile:
    design: str
    gcells: int
    hotspots: int
    train: int
    valid: int
    test: int


@dataclass(frozen=True)
class DatasetProfile:
    designs: list[DesignProfile] = field(default_factory=list)

    @property
    def total(self) -> DesignProfile:
        return DesignProfile(
            "Total",
            sum(d.gcells for d in self.designs),
            sum(d.hotspots for d in self.designs),
            sum(d.train for d in self.designs),
            sum(d.valid for d in self.designs),
            sum(d.test for d in self.designs),
        )

    def to_markdown(self) -> str:
        lines = [
            "| Design | # G-cells | # DRC hotspots | Training | Validation | Testing |",
            "|---|---:|---:|---:|---:|---:|",
        ]
        for d in [*self.designs, self.total]:
            lines.append(f"| {d.design} | {d.gcells} | {d.hotspots} | {d.train} | {d.valid} | {d.test} |")
        return "\n".join(lines) + "\n"


def profile(result: SplitResult) -> DatasetProfile:
    """Per-design counts of retained g-cells, hotspots and partition sizes."""
    counts: dict[str, list[int]] = {}
    for part, members in (("train", result.train), ("valid", result.valid)):
        for s in members:
            row = counts.setdefault(s.design_id, [0, 0, 0, 0])
            row[0] += s.label
            row[1 if part == "train" else 2] += 1
    for design, members in result.tests.items():
        row = counts.setdefault(design, [0, 0, 0, 0])
        row[0] += sum(s.label for s in members)
        row[3] += len(members)
    designs = [
        DesignProfile(design, tr + va + te, hot, tr, va, te)
        for design, (hot, tr, va, te) in sorted(counts.items())
    ]
    return DatasetProfile(designs)
