"""
Subset Selection

Fixed 0/1 subset-connection layers feeding each voter: every feature, the
largest-variance transformed features, or Smart Random Selection (sampling
without replacement with probability proportional to remaining variance).
"""

import logging
from dataclasses import dataclass

import numpy as np

from app.core.seeding import derive_rng
from app.errors import ConfigError
from app.models.schemas import SelectionConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubsetMask:
    """Sorted distinct feature indices routed to one voter."""
    indices: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise ConfigError(f"subset mask has repeated indices: {self.indices}")
        if list(self.indices) != sorted(self.indices):
            raise ConfigError("subset mask indices must be ascending")

    @property
    def size(self) -> int:
        return len(self.indices)

    def weights(self, num_features: int) -> tuple[np.ndarray, np.ndarray]:
        """Equivalent layer as (n x N weight matrix of 0/1, zero bias vector)."""
        matrix = np.zeros((self.size, num_features))
        matrix[np.arange(self.size), list(self.indices)] = 1.0
        return matrix, np.zeros(self.size)

    def apply(self, Z: np.ndarray) -> np.ndarray:
        return Z[:, list(self.indices)]


def _check_size(n: int, num_features: int) -> None:
    if n < 1:
        raise ConfigError(f"subset size must be at least 1, got {n}")
    if n > num_features:
        raise ConfigError(f"subset size {n} exceeds feature count {num_features}")


def select_largest(n: int, variances: np.ndarray) -> list[int]:
    """Indices of the n largest variances (ties to the lower index), ascending."""
    variances = np.asarray(variances, dtype=np.float64)
    _check_size(n, len(variances))
    top = np.argsort(-variances, kind="stable")[:n]
    return sorted(int(i) for i in top)


def srs_select(n: int, variances: np.ndarray, rng: np.random.Generator) -> list[int]:
    """
    Smart Random Selection of n distinct indices.

    Each draw picks index i from the remaining set T with probability
    var[i] / sum(var[T]). When every remaining variance is zero the draw is
    uniform over T.

    Args:
        n: Number of indices to select
        variances: Non-negative variance per transformed feature
        rng: Random generator

    Returns:
        Selected indices, ascending
    """
    variances = np.clip(np.asarray(variances, dtype=np.float64), 0.0, None)
    _check_size(n, len(variances))
    remaining = np.ones(len(variances), dtype=bool)
    selected: list[int] = []
    while len(selected) < n:
        candidates = np.flatnonzero(remaining)
        weights = variances[candidates]
        total = weights.sum()
        if total > 0:
            pick = rng.choice(candidates, p=weights / total)
        else:
            pick = rng.choice(candidates)
        selected.append(int(pick))
        remaining[pick] = False
    return sorted(selected)


def build_masks(cfg: SelectionConfig, variances: np.ndarray) -> list[SubsetMask]:
    """
    One mask per voter.

    Args:
        cfg: Mode, subset size, number of voters and seed
        variances: Per-feature variance of the transformed training data

    Returns:
        `cfg.num_voters` masks; voter i's SRS draw uses its own stream
        derived from (seed, i)
    """
    num_features = len(variances)
    if cfg.mode == "all":
        mask = SubsetMask(tuple(range(num_features)))
        return [mask] * cfg.num_voters

    n = cfg.subset_size if cfg.subset_size is not None else num_features
    if cfg.mode == "largest_variance":
        mask = SubsetMask(tuple(select_largest(n, variances)))
        return [mask] * cfg.num_voters

    masks = [
        SubsetMask(tuple(srs_select(n, variances, derive_rng(cfg.seed, "srs", voter))))
        for voter in range(cfg.num_voters)
    ]
    logger.debug("SRS: %d distinct subsets among %d voters", len(set(masks)), len(masks))
    return masks
