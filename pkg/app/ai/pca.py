"""
PCA Transform Layer

Eigendecomposition of the training covariance of normalised features. The
fitted matrix is applied as a fixed, bias-free linear layer to every split.
"""

import logging
from dataclasses import dataclass

import numpy as np

from app.errors import DataError, DimensionError

logger = logging.getLogger(__name__)

ZERO_VARIANCE = 1e-12
ORTHONORMAL_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class PcaModel:
    """Column k of `components` is the k-th principal direction."""
    components: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        n = self.components.shape[0]
        if self.components.shape != (n, n) or self.variances.shape != (n,):
            raise DimensionError(
                f"components {self.components.shape} and variances {self.variances.shape} do not describe an {n}-feature transform"
            )

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def is_orthonormal(self, tolerance: float = ORTHONORMAL_TOLERANCE) -> bool:
        gram = self.components.T @ self.components
        return bool(np.abs(gram - np.eye(self.dim)).max(initial=0.0) <= tolerance)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PcaModel):
            return NotImplemented
        return np.array_equal(self.components, other.components) and np.array_equal(self.variances, other.variances)

    __hash__ = None  # type: ignore[assignment]


def _check_matrix(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise DataError("PCA input contains non-finite values")
    return X


def pca_fit(X: np.ndarray) -> PcaModel:
    """
    Fit the PCA layer on a normalised training matrix.

    Args:
        X: (n, N) matrix, n >= 2

    Returns:
        PcaModel with variances sorted descending and each component's
        largest-magnitude entry positive
    """
    X = _check_matrix(X)
    n = X.shape[0]
    if n < 2:
        raise DataError(f"PCA needs at least 2 samples, got {n}")

    centered = X - X.mean(axis=0)
    covariance = centered.T @ centered / n
    covariance = (covariance + covariance.T) / 2
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)

    order = np.argsort(-eigenvalues, kind="stable")
    variances = eigenvalues[order]
    components = eigenvectors[:, order]

    pivots = np.argmax(np.abs(components), axis=0)
    signs = np.sign(components[pivots, np.arange(components.shape[1])])
    components = components * np.where(signs == 0, 1.0, signs)

    variances = np.where(variances < ZERO_VARIANCE, 0.0, variances)
    logger.debug(
        "PCA on %d x %d: %d zero-variance components, top variance %.4g",
        n, X.shape[1], int((variances == 0).sum()), variances[0] if len(variances) else 0.0,
    )
    return PcaModel(components=components, variances=variances)


def identity_pca(X: np.ndarray) -> PcaModel:
    """Pass-through layer for settings without PCA; variances are the column variances."""
    X = _check_matrix(X)
    return PcaModel(components=np.eye(X.shape[1]), variances=X.var(axis=0))


def pca_transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    """X @ components, identical for training, validation and test data."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise DimensionError(f"PCA layer expects {model.dim} features, got shape {X.shape}")
    return X @ model.components
