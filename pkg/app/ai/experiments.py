"""
Experiments

Validation grid search over ensemble hyperparameters and the settings
comparison matrix (settings 1-4 plus the random forest, evaluated on every
test design and on all test samples pooled).
"""

import csv
import io
import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from app.ai.ensemble import EnsembleModel, predict, save_model, train
from app.ai.metrics import EvalReport, evaluate, format_metric
from app.ai.random_forest import RandomForest, rf_predict, rf_train, save_forest
from app.core.dataset import SplitResult
from app.core.features import Sample, stack
from app.errors import DataError, UndefinedMetricError
from app.models.schemas import ExperimentMatrix, GridResultRow, GridSpec, MatrixConfig, TrainConfig

logger = logging.getLogger(__name__)

POOLED_ROW = "All testing samples"
METRICS = ("acc_e", "a_roc", "a_prc")
METRIC_LABELS = {"acc_e": "Acc_e", "a_roc": "A_roc", "a_prc": "A_prc"}


# ============= Grid search =============

def grid_configs(spec: GridSpec) -> list[TrainConfig]:
    """Every combination of the candidate lists, applied on top of `spec.base`."""
    subsets = [None] if spec.mode == "all" else spec.subset_size
    configs = []
    for lr, epochs, voters, subset in itertools.product(
        spec.learning_rate, spec.epochs, spec.num_voters, subsets
    ):
        selection = spec.base.selection.model_copy(
            update={"mode": spec.mode, "subset_size": subset, "num_voters": voters}
        )
        configs.append(spec.base.model_copy(update={
            "learning_rate": lr, "epochs": epochs, "num_voters": voters, "selection": selection,
        }))
    return configs


def _rank_key(row: GridResultRow, metric: str) -> tuple:
    return (-getattr(row, metric), row.num_voters, row.subset_size, row.learning_rate, row.epochs)


def grid_search(
    train_samples: list[Sample],
    valid_samples: list[Sample],
    spec: GridSpec,
    threads: Optional[int] = None,
) -> tuple[list[GridResultRow], TrainConfig]:
    """
    Train every grid configuration and rank them on the validation set.

    Ties on the selection metric go to fewer voters, then the smaller
    subset, then the lower learning rate.

    Args:
        train_samples: Training set
        valid_samples: Validation set; must contain both classes
        spec: Candidate lists, selection mode and metric
        threads: Voter threads per training run

    Returns:
        (rows ranked best first, best TrainConfig)
    """
    if not valid_samples:
        raise DataError("grid search needs a non-empty validation set")
    X_valid, y_valid = stack(valid_samples)
    n_pos = int(y_valid.sum())
    if n_pos == 0 or n_pos == len(y_valid):
        raise UndefinedMetricError(
            f"validation metrics are undefined ({n_pos} positive of {len(y_valid)} samples)", subset="validation",
        )

    configs = grid_configs(spec)
    rows: list[tuple[GridResultRow, TrainConfig]] = []
    for index, cfg in enumerate(configs, start=1):
        model = train(train_samples, cfg, threads=threads)
        report = evaluate(predict(model, X_valid), y_valid)
        row = GridResultRow(
            rank=0,
            learning_rate=cfg.learning_rate,
            epochs=cfg.epochs,
            num_voters=cfg.num_voters,
            subset_size=cfg.selection.subset_size or X_valid.shape[1],
            acc_e=report.acc_e,
            a_roc=report.a_roc,
            a_prc=report.a_prc,
        )
        logger.info(
            "grid %d/%d lr=%g epochs=%d m=%d n=%d: %s=%s",
            index, len(configs), row.learning_rate, row.epochs, row.num_voters, row.subset_size,
            spec.metric, format_metric(getattr(row, spec.metric)),
        )
        rows.append((row, cfg))

    rows.sort(key=lambda pair: _rank_key(pair[0], spec.metric))
    ranked = [row.model_copy(update={"rank": rank}) for rank, (row, _) in enumerate(rows, start=1)]
    return ranked, rows[0][1]


def grid_table_csv(rows: list[GridResultRow]) -> str:
    out = io.StringIO()
    fields = list(GridResultRow.model_fields)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow(["" if getattr(row, f) is None else getattr(row, f) for f in fields])
    return out.getvalue()


# ============= Settings matrix =============

@dataclass
class SettingOutcome:
    name: str
    model: EnsembleModel | RandomForest
    scores: dict[str, np.ndarray]
    reports: dict[str, EvalReport]
    pooled: EvalReport
    seconds: dict[str, float] = field(default_factory=dict)

    def model_bytes(self) -> bytes:
        if isinstance(self.model, RandomForest):
            return save_forest(self.model)
        return save_model(self.model)


@dataclass
class MatrixResult:
    designs: list[str]
    outcomes: list[SettingOutcome]

    def report(self, setting: str, row: str) -> EvalReport:
        outcome = next(o for o in self.outcomes if o.name == setting)
        return outcome.pooled if row == POOLED_ROW else outcome.reports[row]

    def rows(self) -> list[tuple[str, list[Optional[float]]]]:
        table = []
        for row in [*self.designs, POOLED_ROW]:
            values = []
            for outcome in self.outcomes:
                report = outcome.pooled if row == POOLED_ROW else outcome.reports[row]
                values.extend(report.metric(m) for m in METRICS)
            table.append((row, values))
        return table

    def header(self) -> list[str]:
        return [f"{o.name} {METRIC_LABELS[m]}" for o in self.outcomes for m in METRICS]

    def to_markdown(self) -> str:
        header = ["Test set", *self.header()]
        lines = ["| " + " | ".join(header) + " |", "|---|" + "---:|" * (len(header) - 1)]
        for name, values in self.rows():
            lines.append("| " + " | ".join([name, *(format_metric(v) for v in values)]) + " |")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["test_set", *(h.replace(" ", "_").lower() for h in self.header())])
        for name, values in self.rows():
            writer.writerow([name, *(format_metric(v, digits=6) for v in values)])
        return out.getvalue()


def _evaluate_tests(name: str, model, scorer, result: SplitResult, seconds: dict) -> SettingOutcome:
    start = time.perf_counter()
    scores = {design: scorer(model, samples) if samples else np.zeros(0) for design, samples in sorted(result.tests.items())}
    seconds["prediction"] = round(time.perf_counter() - start, 3)
    reports = {}
    for design, design_scores in scores.items():
        labels = np.array([s.label for s in result.tests[design]], dtype=bool)
        reports[design] = (
            evaluate(design_scores, labels) if len(labels)
            else EvalReport(acc_e=None, a_roc=None, a_prc=None, n_pos=0, n_neg=0)
        )
    pooled_scores = np.concatenate([scores[d] for d in sorted(scores)]) if scores else np.zeros(0)
    pooled_labels = np.array([s.label for s in result.all_tests], dtype=bool)
    pooled = (
        evaluate(pooled_scores, pooled_labels) if len(pooled_labels)
        else EvalReport(acc_e=None, a_roc=None, a_prc=None, n_pos=0, n_neg=0)
    )
    logger.info(
        "%s pooled: Acc_e %s A_roc %s A_prc %s",
        name, format_metric(pooled.acc_e), format_metric(pooled.a_roc), format_metric(pooled.a_prc),
    )
    return SettingOutcome(name=name, model=model, scores=scores, reports=reports, pooled=pooled, seconds=seconds)


def run_matrix(result: SplitResult, cfg: MatrixConfig, threads: Optional[int] = None) -> MatrixResult:
    """
    Train every requested setting on the training set and score every test design.

    Args:
        result: Split with train set and per-design test sets
        cfg: Base training / forest configs, voters, subset size and settings to run
        threads: Worker threads for voters and trees

    Returns:
        MatrixResult with one outcome per setting, in `cfg.settings` order
    """
    if not result.train:
        raise DataError("the split has no training samples")
    matrix = ExperimentMatrix.from_config(cfg)
    outcomes = []
    for name in cfg.settings:
        seconds: dict[str, float] = {}
        start = time.perf_counter()
        if name == "rf":
            model = rf_train(result.train, matrix.rf, threads=threads)
            scorer = rf_predict
        else:
            model = train(result.train, matrix.settings[name], threads=threads)
            scorer = predict
        seconds["training"] = round(time.perf_counter() - start, 3)
        logger.info("%s trained in %.2fs", name, seconds["training"])
        outcomes.append(_evaluate_tests(name, model, scorer, result, seconds))
    return MatrixResult(designs=sorted(result.tests), outcomes=outcomes)
