"""
Evaluation Metrics

Threshold-independent metrics over a full threshold sweep: effective
accuracy (TPR where TPR = TNR), area under the ROC curve and area under the
precision-recall curve. Metrics are None (undefined) when either class is
absent.
"""

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from sklearn.metrics import auc

from app.core.storage import atomic_write_text
from app.errors import DataError, UndefinedMetricError
from app.models.schemas import EvalReportDocument

logger = logging.getLogger(__name__)

UNDEFINED_CELL = "---"
ROC_HEADER = ("fpr", "tpr", "threshold")
PR_HEADER = ("recall", "precision", "threshold")
TIE_TOLERANCE = 1e-12

AccEMode = Literal["nearest", "interpolate"]


@dataclass(frozen=True)
class EvalReport:
    acc_e: Optional[float]
    a_roc: Optional[float]
    a_prc: Optional[float]
    n_pos: int
    n_neg: int
    roc_points: list[tuple[float, float, float]] = field(default_factory=list)
    pr_points: list[tuple[float, float, float]] = field(default_factory=list)

    @property
    def undefined(self) -> bool:
        return self.n_pos == 0 or self.n_neg == 0

    def to_document(self) -> dict:
        return EvalReportDocument(
            acc_e=self.acc_e,
            a_roc=self.a_roc,
            a_prc=self.a_prc,
            n_pos=self.n_pos,
            n_neg=self.n_neg,
            undefined=self.undefined,
        ).model_dump()

    def metric(self, name: str) -> Optional[float]:
        return getattr(self, name)


def format_metric(value: Optional[float], digits: int = 4) -> str:
    return UNDEFINED_CELL if value is None else f"{value:.{digits}f}"


# ============= Sweep =============

@dataclass(frozen=True)
class Sweep:
    """Confusion counts at every swept threshold, from +inf down to -inf."""
    thresholds: np.ndarray
    tp: np.ndarray
    fp: np.ndarray
    n_pos: int
    n_neg: int

    @property
    def tpr(self) -> np.ndarray:
        return self.tp / self.n_pos

    @property
    def fpr(self) -> np.ndarray:
        return self.fp / self.n_neg

    @property
    def precision(self) -> np.ndarray:
        predicted = self.tp + self.fp
        # nothing predicted positive: precision 1
        return np.where(predicted > 0, self.tp / np.maximum(predicted, 1), 1.0)


def _check_inputs(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.ndim != 1 or labels.ndim != 1:
        raise DataError("scores and labels must be 1-D")
    if len(scores) != len(labels):
        raise DataError(f"{len(scores)} scores but {len(labels)} labels")
    if len(scores) == 0:
        raise DataError("cannot evaluate an empty score list")
    if not np.isfinite(scores).all():
        raise DataError("scores contain non-finite values")
    return scores, labels


def sweep(scores: np.ndarray, labels: np.ndarray) -> Sweep:
    """
    Classify `score > t` for t in (+inf, distinct scores descending, -inf).

    Args:
        scores: Finite scores
        labels: Boolean ground truth

    Returns:
        Sweep with one entry per threshold
    """
    distinct, inverse = np.unique(-scores, return_inverse=True)
    distinct = -distinct
    pos_per_value = np.bincount(inverse, weights=labels.astype(np.float64), minlength=len(distinct))
    all_per_value = np.bincount(inverse, minlength=len(distinct)).astype(np.float64)
    pos_above = np.concatenate([[0.0], np.cumsum(pos_per_value)])
    all_above = np.concatenate([[0.0], np.cumsum(all_per_value)])
    n_pos = int(labels.sum())
    tp = np.concatenate([[0.0], pos_above])
    fp = np.concatenate([[0.0], all_above - pos_above])
    thresholds = np.concatenate([[np.inf], distinct, [-np.inf]])
    return Sweep(thresholds=thresholds, tp=tp, fp=fp, n_pos=n_pos, n_neg=len(labels) - n_pos)


def _trapezoid(x: np.ndarray, y: np.ndarray) -> float:
    return float(auc(x, y))


def _step_area(recall: np.ndarray, precision: np.ndarray) -> float:
    return float(np.sum((recall[1:] - recall[:-1]) * precision[1:]))


def _acc_e_nearest(tpr: np.ndarray, fpr: np.ndarray) -> float:
    gap = np.abs(tpr - (1.0 - fpr))
    closest = gap <= gap.min() + TIE_TOLERANCE
    return float(tpr[closest].max())


def _acc_e_interpolate(tpr: np.ndarray, fpr: np.ndarray) -> float:
    """TPR where the ROC polyline crosses the line TPR = 1 - FPR."""
    balance = tpr + fpr - 1.0
    j = int(np.argmax(balance >= 0))
    if balance[j] == 0 or j == 0:
        return float(tpr[j])
    t = -balance[j - 1] / (balance[j] - balance[j - 1])
    return float(tpr[j - 1] + t * (tpr[j] - tpr[j - 1]))


def evaluate(scores, labels, acc_e_mode: AccEMode = "nearest") -> EvalReport:
    """
    Acc_e, A_roc and A_prc of `scores` against boolean `labels`.

    A_roc integrates the ROC polyline by trapezoids; A_prc is the step sum
    of (R_k - R_{k-1}) * P_k over decreasing thresholds; Acc_e is the TPR at
    the swept threshold closest to TPR = TNR (ties toward higher TPR) or,
    with acc_e_mode="interpolate", at the ROC / anti-diagonal crossing.

    Args:
        scores: Score per sample
        labels: Ground truth per sample
        acc_e_mode: "nearest" or "interpolate"

    Returns:
        EvalReport; metrics are None when a class is absent
    """
    scores, labels = _check_inputs(scores, labels)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        logger.debug("metrics undefined: %d positive, %d negative", n_pos, n_neg)
        return EvalReport(acc_e=None, a_roc=None, a_prc=None, n_pos=n_pos, n_neg=n_neg)

    s = sweep(scores, labels)
    tpr, fpr, precision = s.tpr, s.fpr, s.precision
    acc_e = _acc_e_interpolate(tpr, fpr) if acc_e_mode == "interpolate" else _acc_e_nearest(tpr, fpr)
    return EvalReport(
        acc_e=acc_e,
        a_roc=_trapezoid(fpr, tpr),
        a_prc=_step_area(tpr, precision),
        n_pos=n_pos,
        n_neg=n_neg,
        roc_points=[(float(f), float(t), float(th)) for f, t, th in zip(fpr, tpr, s.thresholds)],
        pr_points=[(float(r), float(p), float(th)) for r, p, th in zip(tpr, precision, s.thresholds)],
    )


def auc_oracle(scores, labels) -> float:
    """P(score_pos > score_neg) + 0.5 * P(tie) over every positive/negative pair."""
    scores, labels = _check_inputs(scores, labels)
    pos, neg = scores[labels], scores[~labels]
    if len(pos) == 0 or len(neg) == 0:
        raise UndefinedMetricError("AUC needs at least one positive and one negative sample")
    greater = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((greater + 0.5 * ties) / (len(pos) * len(neg)))


# ============= Curve files =============

def _curve_csv(header: tuple[str, ...], rows: list[tuple[float, float, float]]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) for v in row])
    return out.getvalue()


def emit_curves(report: EvalReport, destination: str | Path, prefix: str = "") -> tuple[Path, Path]:
    """
    Write `<prefix>roc.csv` and `<prefix>pr.csv` under `destination`.

    Returns:
        (ROC path, PR path)
    """
    if report.undefined:
        raise UndefinedMetricError(
            f"curves are undefined with {report.n_pos} positive and {report.n_neg} negative samples"
        )
    destination = Path(destination)
    roc_path = atomic_write_text(destination / f"{prefix}roc.csv", _curve_csv(ROC_HEADER, report.roc_points))
    pr_path = atomic_write_text(destination / f"{prefix}pr.csv", _curve_csv(PR_HEADER, report.pr_points))
    return roc_path, pr_path


def read_curve(path: str | Path) -> np.ndarray:
    """(rows, 3) array from a curve CSV written by emit_curves."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        next(reader)
        return np.array([[float(v) for v in row] for row in reader], dtype=np.float64)


def roc_area(points: np.ndarray) -> float:
    return _trapezoid(points[:, 0], points[:, 1])


def pr_area(points: np.ndarray) -> float:
    return _step_area(points[:, 0], points[:, 1])
