"""
NN Ensemble

Normalisation -> PCA transform -> per-voter subset connection -> voters ->
soft-voting sum. Only voter weights are trained; every other layer is fixed
after it is fitted on the training set.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from app.ai.pca import PcaModel, identity_pca, pca_fit, pca_transform
from app.ai.subset import SubsetMask, build_masks
from app.ai.voter import VoterNet, forward_batch, train_voter
from app.config import get_settings
from app.core.dataset import NormStats, apply_norm, fit_norm
from app.core.features import Sample, stack
from app.core.seeding import derive_rng
from app.core.storage import canonical_json
from app.errors import ConfigError, DataError, DimensionError, ModelFormatError, SchemaError
from app.models.schemas import EnsembleDocument, TrainConfig, validate_document

logger = logging.getLogger(__name__)

MODEL_KIND = "nn_ensemble"


@dataclass(frozen=True, eq=False)
class EnsembleModel:
    norm: NormStats
    pca: PcaModel
    masks: list[SubsetMask]
    voters: list[VoterNet]
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.voters or len(self.voters) != len(self.masks):
            raise ModelFormatError(f"{len(self.voters)} voters for {len(self.masks)} masks")
        if self.norm.dim != self.pca.dim:
            raise ModelFormatError(f"normalisation width {self.norm.dim} != PCA width {self.pca.dim}")
        for i, (mask, voter) in enumerate(zip(self.masks, self.voters)):
            if mask.indices and not 0 <= mask.indices[0] <= mask.indices[-1] < self.pca.dim:
                raise ModelFormatError(f"mask {i} indexes outside [0, {self.pca.dim})")
            if voter.input_width != mask.size:
                raise ModelFormatError(f"voter {i} takes {voter.input_width} inputs but mask {i} routes {mask.size}")

    @property
    def num_voters(self) -> int:
        return len(self.voters)

    @property
    def num_features(self) -> int:
        return self.norm.dim

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EnsembleModel):
            return NotImplemented
        return (
            self.norm == other.norm
            and self.pca == other.pca
            and self.masks == other.masks
            and self.voters == other.voters
            and self.meta == other.meta
        )

    __hash__ = None  # type: ignore[assignment]


def _as_matrix(samples: list[Sample] | np.ndarray) -> np.ndarray:
    return samples if isinstance(samples, np.ndarray) else stack(samples)[0]


# ============= Training =============

def train(
    train_samples: list[Sample],
    cfg: TrainConfig,
    threads: Optional[int] = None,
) -> EnsembleModel:
    X, y = stack(train_samples)
    return train_arrays(X, y, cfg, threads=threads)


def train_arrays(
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    threads: Optional[int] = None,
) -> EnsembleModel:
    """
    Fit the fixed layers and train every voter.

    Args:
        X: (n, N) raw training features, n >= 2
        y: (n,) training labels
        cfg: Training configuration; `cfg.seed` drives masks, initialisation and shuffling
        threads: Concurrent voter jobs (defaults to the configured thread count)

    Returns:
        Trained EnsembleModel
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError(f"training needs at least 2 samples, got {X.shape[0] if X.ndim else 0}")
    if y.shape != (X.shape[0],):
        raise DimensionError(f"{X.shape[0]} feature rows but {y.shape} labels")

    norm = fit_norm(X)
    normalised = apply_norm(norm, X)
    pca = pca_fit(normalised) if cfg.pca_enabled else identity_pca(normalised)
    Z = pca_transform(pca, normalised)
    masks = build_masks(cfg.selection.model_copy(update={"seed": cfg.seed}), pca.variances)

    def job(index: int) -> tuple[VoterNet, list[float]]:
        return train_voter(masks[index].apply(Z), y, cfg, derive_rng(cfg.seed, "voter", index))

    workers = threads or get_settings().threads
    logger.info(
        "training %d voter(s) on %d samples (%d positive), %d features, PCA %s, mode %s, %d thread(s)",
        cfg.num_voters, X.shape[0], int(y.sum()), X.shape[1],
        "on" if cfg.pca_enabled else "off", cfg.selection.mode, workers,
    )
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(cfg.num_voters)))
    else:
        results = [job(i) for i in range(cfg.num_voters)]

    histories = np.array([history for _, history in results])
    for epoch, loss in enumerate(histories.mean(axis=0), start=1):
        logger.info("epoch %d/%d mean loss %.6f", epoch, cfg.epochs, loss)

    return EnsembleModel(
        norm=norm,
        pca=pca,
        masks=masks,
        voters=[voter for voter, _ in results],
        meta={
            "train_config": cfg.model_dump(mode="json"),
            "num_train_samples": int(X.shape[0]),
            "num_train_positive": int(y.sum()),
            "final_epoch_loss": float(histories.mean(axis=0)[-1]),
        },
    )


# ============= Inference =============

def voter_outputs(model: EnsembleModel, samples: list[Sample] | np.ndarray) -> np.ndarray:
    """(n, m) matrix of per-voter probabilities."""
    X = _as_matrix(samples)
    if X.ndim != 2 or X.shape[1] != model.num_features:
        raise DimensionError(f"model expects {model.num_features} features, got shape {X.shape}")
    Z = pca_transform(model.pca, apply_norm(model.norm, X))
    return np.column_stack([forward_batch(voter, mask.apply(Z))[2] for mask, voter in zip(model.masks, model.voters)])


def predict(model: EnsembleModel, samples: list[Sample] | np.ndarray) -> np.ndarray:
    """Soft-vote score per sample: the sum of voter probabilities, in [0, m]."""
    outputs = voter_outputs(model, samples)
    scores = np.zeros(outputs.shape[0])
    for column in outputs.T:
        scores = scores + column
    return scores


def classify(scores, threshold: float) -> np.ndarray:
    return np.asarray(scores, dtype=np.float64) > threshold


# ============= Serialization =============

def to_document(model: EnsembleModel) -> dict[str, Any]:
    return {
        "kind": MODEL_KIND,
        "version": get_settings().model_format_version,
        "norm": {"mean": model.norm.mean.tolist(), "std": model.norm.std.tolist()},
        "pca": {"components": model.pca.components.tolist(), "variances": model.pca.variances.tolist()},
        "masks": [list(mask.indices) for mask in model.masks],
        "voters": [
            {"W1": v.W1.tolist(), "b1": v.b1.tolist(), "w2": v.w2.tolist(), "b2": float(v.b2)}
            for v in model.voters
        ],
        "meta": model.meta,
    }


def save_model(model: EnsembleModel) -> bytes:
    return canonical_json(to_document(model))


def decode_model_bytes(data: bytes | str) -> dict[str, Any]:
    """JSON-decode a model file; truncation or corruption is a ModelFormatError."""
    try:
        document = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        offset = getattr(e, "pos", getattr(e, "start", 0))
        raise ModelFormatError(f"model file is not valid JSON (at byte {offset})") from None
    if not isinstance(document, dict):
        raise ModelFormatError("model file must hold a JSON object")
    version = document.get("version")
    expected = get_settings().model_format_version
    if version != expected:
        raise ModelFormatError(f"model format version {version!r} is not supported (expected {expected})")
    return document


def _matrix(values: list, name: str) -> np.ndarray:
    try:
        array = np.array(values, dtype=np.float64)
    except ValueError:
        raise ModelFormatError(f"{name} is not a rectangular matrix") from None
    if array.ndim != 2:
        raise ModelFormatError(f"{name} is not a matrix")
    return array


def from_document(document: dict[str, Any]) -> EnsembleModel:
    try:
        doc = validate_document(EnsembleDocument, document)
    except SchemaError as e:
        raise ModelFormatError(str(e)) from None
    try:
        norm = NormStats(np.array(doc.norm.mean), np.array(doc.norm.std))
        components = _matrix(doc.pca.components, "pca.components")
        pca = PcaModel(components, np.array(doc.pca.variances))
        masks = [SubsetMask(tuple(indices)) for indices in doc.masks]
        voters = [
            VoterNet(W1=_matrix(v.W1, f"voters.{i}.W1"), b1=np.array(v.b1), w2=np.array(v.w2), b2=v.b2)
            for i, v in enumerate(doc.voters)
        ]
    except (DimensionError, DataError, ConfigError) as e:
        raise ModelFormatError(str(e)) from None
    if not pca.is_orthonormal(1e-6):
        raise ModelFormatError("pca.components is not orthonormal")
    return EnsembleModel(norm=norm, pca=pca, masks=masks, voters=voters, meta=dict(doc.meta))


def load_model(data: bytes | str) -> EnsembleModel:
    return from_document(decode_model_bytes(data))
