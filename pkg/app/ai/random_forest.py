"""
Random Forest

Comparison model over raw (un-transformed) features: bootstrap-resampled
decision trees grown with class-weighted Gini splits, each tree restricted
to its own random feature subset (or, optionally, a fresh subset per split).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from app.ai.ensemble import decode_model_bytes
from app.config import get_settings
from app.core.features import Sample, stack
from app.core.seeding import derive_rng
from app.core.storage import canonical_json
from app.errors import DataError, DimensionError, ModelFormatError, SchemaError
from app.models.schemas import ForestDocument, RfConfig, validate_document

logger = logging.getLogger(__name__)

MODEL_KIND = "random_forest"
LEAF = -1
GAIN_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """
    Array-encoded binary tree; node 0 is the root.

    `feature[k] == -1` marks a leaf. `value[k]` is the class-weighted
    positive probability of the training samples that reached node k.
    Samples with x[feature] <= threshold go left.
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    features: tuple[int, ...]

    def __post_init__(self):
        n = len(self.feature)
        if n == 0 or any(len(a) != n for a in (self.threshold, self.left, self.right, self.value)):
            raise ModelFormatError("tree node arrays must be non-empty and equal length")
        internal = self.feature != LEAF
        allowed = set(self.features)
        if not all(int(f) in allowed for f in self.feature[internal]):
            raise ModelFormatError("tree splits on a feature outside its assigned subset")
        if not np.isfinite(self.threshold[internal]).all():
            raise ModelFormatError("tree thresholds must be finite")
        children = np.concatenate([self.left[internal], self.right[internal]])
        if ((children <= 0) | (children >= n)).any():
            raise ModelFormatError("tree child index out of range")
        if ((self.value < 0) | (self.value > 1)).any():
            raise ModelFormatError("leaf probabilities must lie in [0, 1]")

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=int)
        for k in range(self.node_count):
            if self.feature[k] != LEAF:
                depths[self.left[k]] = depths[self.right[k]] = depths[k] + 1
        return int(depths.max())

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=int)
        active = self.feature[node] != LEAF
        while active.any():
            rows = np.flatnonzero(active)
            current = node[rows]
            go_left = X[rows, self.feature[current]] <= self.threshold[current]
            node[rows] = np.where(go_left, self.left[current], self.right[current])
            active = self.feature[node] != LEAF
        return self.value[node]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DecisionTree):
            return NotImplemented
        return self.features == other.features and all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in ("feature", "threshold", "left", "right", "value")
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class RandomForest:
    trees: list[DecisionTree]
    num_features: int
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.trees:
            raise ModelFormatError("a forest needs at least one tree")
        for tree in self.trees:
            if any(not 0 <= f < self.num_features for f in tree.features):
                raise ModelFormatError(f"tree feature subset exceeds {self.num_features} features")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RandomForest):
            return NotImplemented
        return self.num_features == other.num_features and self.trees == other.trees and self.meta == other.meta

    __hash__ = None  # type: ignore[assignment]


# ============= Tree growth =============

def weighted_gini(pos_weight: float, neg_weight: float) -> float:
    total = pos_weight + neg_weight
    if total <= 0:
        return 0.0
    p = pos_weight / total
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _midpoint(a: float, b: float) -> float:
    mid = a + (b - a) / 2.0
    return a if mid >= b else mid


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    candidates: list[int],
    min_samples_leaf: int,
) -> Optional[tuple[int, float, float]]:
    """
    Lowest weighted child impurity over every candidate feature and midpoint.

    Args:
        X: (n, N) samples at the node
        y: (n,) boolean labels
        weights: (n,) class weight of each sample
        candidates: Feature indices to search, ascending
        min_samples_leaf: Minimum sample count per child

    Returns:
        (feature, threshold, weighted child impurity) or None if no split
        is allowed. Ties keep the lowest feature, then the lowest threshold.
    """
    n = len(y)
    best: Optional[tuple[int, float, float]] = None
    positive = np.where(y, weights, 0.0)
    total_weight = weights.sum()
    total_pos = positive.sum()
    for f in candidates:
        order = np.argsort(X[:, f], kind="stable")
        values = X[order, f]
        cum_weight = np.cumsum(weights[order])[:-1]
        cum_pos = np.cumsum(positive[order])[:-1]
        left_count = np.arange(1, n)
        valid = (values[:-1] < values[1:]) & (left_count >= min_samples_leaf) & (n - left_count >= min_samples_leaf)
        if not valid.any():
            continue
        cum_neg = cum_weight - cum_pos
        right_weight = total_weight - cum_weight
        right_pos = total_pos - cum_pos
        right_neg = right_weight - right_pos
        with np.errstate(divide="ignore", invalid="ignore"):
            left_impurity = cum_weight - (cum_pos ** 2 + cum_neg ** 2) / cum_weight
            right_impurity = right_weight - (right_pos ** 2 + right_neg ** 2) / right_weight
        score = (left_impurity + right_impurity) / total_weight
        score = np.where(valid, score, np.inf)
        i = int(np.argmin(score))
        if best is None or score[i] < best[2] - GAIN_TOLERANCE:
            best = (f, _midpoint(values[i], values[i + 1]), float(score[i]))
    return best


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    cfg: RfConfig,
    features: tuple[int, ...],
    rng: np.random.Generator,
) -> DecisionTree:
    """
    Grow one tree greedily, depth-first with an explicit stack.

    Args:
        X: (n, N) training rows (already bootstrapped)
        y: (n,) boolean labels
        cfg: Depth/leaf limits, class weights and feature sampling mode
        features: Assigned feature subset, ascending
        rng: Stream for per-split feature sampling

    Returns:
        DecisionTree
    """
    weights = np.where(y, cfg.w1, cfg.w0)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows: np.ndarray) -> int:
        w = weights[rows]
        pos = w[y[rows]].sum()
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(pos / w.sum()))
        return len(feature) - 1

    root_rows = np.arange(len(y))
    pending = [(new_node(root_rows), root_rows, 0)]
    while pending:
        node, rows, depth = pending.pop()
        w = weights[rows]
        pos = w[y[rows]].sum()
        impurity = weighted_gini(pos, w.sum() - pos)
        if impurity <= 0 or len(rows) < 2 * cfg.min_samples_leaf:
            continue
        if cfg.max_depth is not None and depth >= cfg.max_depth:
            continue
        if cfg.feature_sampling == "per_split":
            k = min(cfg.max_features_per_tree, len(features))
            candidates = sorted(int(i) for i in rng.choice(features, size=k, replace=False))
        else:
            candidates = list(features)
        split = best_split(X[rows], y[rows], w, candidates, cfg.min_samples_leaf)
        if split is None or split[2] >= impurity - GAIN_TOLERANCE:
            continue
        f, t, _ = split
        goes_left = X[rows, f] <= t
        left_rows, right_rows = rows[goes_left], rows[~goes_left]
        feature[node], threshold[node] = f, t
        left[node] = new_node(left_rows)
        right[node] = new_node(right_rows)
        # right pushed first so the left subtree is numbered first
        pending.append((right[node], right_rows, depth + 1))
        pending.append((left[node], left_rows, depth + 1))

    return DecisionTree(
        feature=np.array(feature, dtype=int),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=int),
        right=np.array(right, dtype=int),
        value=np.array(value, dtype=np.float64),
        features=features,
    )


# ============= Forest =============

def rf_train(train_samples: list[Sample], cfg: RfConfig, threads: Optional[int] = None) -> RandomForest:
    X, y = stack(train_samples)
    return rf_train_arrays(X, y, cfg, threads=threads)


def rf_train_arrays(X: np.ndarray, y: np.ndarray, cfg: RfConfig, threads: Optional[int] = None) -> RandomForest:
    """
    Train `cfg.num_trees` trees, each with its own (seed, tree) stream.

    Args:
        X: (n, N) raw training features
        y: (n,) labels
        cfg: Forest configuration
        threads: Concurrent tree jobs (defaults to the configured thread count)

    Returns:
        RandomForest
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(bool)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("cannot train a random forest on an empty training set")
    if y.shape != (X.shape[0],):
        raise DimensionError(f"{X.shape[0]} feature rows but {y.shape} labels")
    n, num_features = X.shape

    def job(index: int) -> DecisionTree:
        rng = derive_rng(cfg.seed, "tree", index)
        rows = rng.integers(0, n, size=n) if cfg.bootstrap else np.arange(n)
        if cfg.feature_sampling == "per_tree":
            k = min(cfg.max_features_per_tree, num_features)
            features = tuple(sorted(int(i) for i in rng.choice(num_features, size=k, replace=False)))
        else:
            features = tuple(range(num_features))
        return grow_tree(X[rows], y[rows], cfg, features, rng)

    workers = threads or get_settings().threads
    logger.info(
        "training %d tree(s) on %d samples (%d positive), %d features, %s sampling, %d thread(s)",
        cfg.num_trees, n, int(y.sum()), num_features, cfg.feature_sampling, workers,
    )
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(job, range(cfg.num_trees)))
    else:
        trees = [job(i) for i in range(cfg.num_trees)]
    logger.info("mean tree size %.1f nodes", float(np.mean([t.node_count for t in trees])))

    return RandomForest(
        trees=trees,
        num_features=num_features,
        meta={"rf_config": cfg.model_dump(mode="json"), "num_train_samples": int(n), "num_train_positive": int(y.sum())},
    )


def rf_predict(forest: RandomForest, samples: list[Sample] | np.ndarray) -> np.ndarray:
    """Mean leaf positive probability over all trees, in [0, 1]."""
    X = samples if isinstance(samples, np.ndarray) else stack(samples)[0]
    if X.ndim != 2 or X.shape[1] != forest.num_features:
        raise DimensionError(f"forest expects {forest.num_features} features, got shape {X.shape}")
    total = np.zeros(X.shape[0])
    for tree in forest.trees:
        total = total + tree.predict_proba(X)
    return total / len(forest.trees)


# ============= Serialization =============

def save_forest(forest: RandomForest) -> bytes:
    return canonical_json({
        "kind": MODEL_KIND,
        "version": get_settings().model_format_version,
        "num_features": forest.num_features,
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "value": t.value.tolist(),
                "features": list(t.features),
            }
            for t in forest.trees
        ],
        "meta": forest.meta,
    })


def from_document(document: dict[str, Any]) -> RandomForest:
    try:
        doc = validate_document(ForestDocument, document)
    except SchemaError as e:
        raise ModelFormatError(str(e)) from None
    trees = []
    for i, t in enumerate(doc.trees):
        lengths = {len(t.feature), len(t.threshold), len(t.left), len(t.right), len(t.value)}
        if len(lengths) != 1:
            raise ModelFormatError(f"trees.{i}: node arrays have different lengths")
        trees.append(DecisionTree(
            feature=np.array(t.feature, dtype=int),
            threshold=np.array(t.threshold, dtype=np.float64),
            left=np.array(t.left, dtype=int),
            right=np.array(t.right, dtype=int),
            value=np.array(t.value, dtype=np.float64),
            features=tuple(t.features),
        ))
    return RandomForest(trees=trees, num_features=doc.num_features, meta=dict(doc.meta))


def load_forest(data: bytes | str) -> RandomForest:
    return from_document(decode_model_bytes(data))
