"""Grid search and the settings comparison matrix."""

import numpy as np
import pytest

from app.ai.experiments import POOLED_ROW, _rank_key, grid_configs, grid_search, grid_table_csv, run_matrix
from app.ai.metrics import UNDEFINED_CELL, evaluate
from app.core.dataset import SplitResult
from app.core.features import Sample
from app.errors import UndefinedMetricError
from app.models.schemas import GridResultRow, GridSpec, MatrixConfig, RfConfig, TrainConfig

from .conftest import make_samples


def _negatives(n, design, seed=0):
    rng = np.random.default_rng(seed)
    return [Sample(design, (i, 0), rng.normal(size=6), False) for i in range(n)]


@pytest.fixture
def tiny_base():
    return TrainConfig(epochs=3, batch_size=16, hidden_units=6, seed=2)


class TestGrid:
    def test_cartesian_product(self, tiny_base):
        spec = GridSpec(learning_rate=[0.001, 0.01], epochs=[1, 2, 3], num_voters=[1, 2], subset_size=[3], base=tiny_base)
        configs = grid_configs(spec)
        assert len(configs) == 12
        assert {(c.learning_rate, c.epochs, c.num_voters) for c in configs} == {
            (lr, e, m) for lr in (0.001, 0.01) for e in (1, 2, 3) for m in (1, 2)
        }
        assert all(c.selection.mode == "srs" and c.selection.subset_size == 3 for c in configs)

    def test_mode_all_ignores_subset(self, tiny_base):
        spec = GridSpec(mode="all", subset_size=[3], base=tiny_base)
        assert grid_configs(spec)[0].selection.subset_size is None

    def test_mode_all_collapses_subset_candidates(self, tiny_base):
        spec = GridSpec(mode="all", learning_rate=[0.001, 0.01], subset_size=[10, 20, 30], base=tiny_base)
        configs = grid_configs(spec)
        assert len(configs) == 2
        assert len({c.model_dump_json() for c in configs}) == 2

    def test_ranked_rows(self, tiny_base):
        train = make_samples(120, seed=1)
        valid = make_samples(80, seed=2)
        spec = GridSpec(learning_rate=[0.001, 0.01], epochs=[3], num_voters=[1, 3], subset_size=[4], base=tiny_base)
        rows, best = grid_search(train, valid, spec, threads=1)
        assert [r.rank for r in rows] == [1, 2, 3, 4]
        scores = [r.a_roc for r in rows]
        assert scores == sorted(scores, reverse=True)
        assert (best.learning_rate, best.num_voters) == (rows[0].learning_rate, rows[0].num_voters)
        assert grid_table_csv(rows).splitlines()[0].startswith("rank,")

    def test_tie_break_order(self):
        def row(voters, subset, lr, epochs):
            return GridResultRow(
                rank=0, learning_rate=lr, epochs=epochs, num_voters=voters, subset_size=subset,
                acc_e=0.8, a_roc=0.9, a_prc=0.5,
            )

        rows = [row(3, 5, 0.01, 10), row(3, 5, 0.001, 20), row(3, 4, 0.1, 10), row(1, 9, 0.1, 10), row(3, 5, 0.001, 10)]
        ordered = sorted(rows, key=lambda r: _rank_key(r, "a_roc"))
        assert ordered == [rows[3], rows[2], rows[4], rows[1], rows[0]]

    def test_single_class_validation(self, tiny_base):
        spec = GridSpec(num_voters=[1], subset_size=[2], epochs=[1], base=tiny_base)
        with pytest.raises(UndefinedMetricError) as info:
            grid_search(make_samples(40), _negatives(10, "d0"), spec, threads=1)
        assert info.value.subset == "validation"


class TestMatrix:
    @pytest.fixture
    def split_result(self):
        return SplitResult(
            train=make_samples(150, seed=1, design="a"),
            valid=[],
            tests={"a": make_samples(60, seed=2, design="a"), "b": _negatives(20, "b", seed=3)},
        )

    @pytest.fixture
    def matrix_config(self, tiny_base):
        return MatrixConfig(
            train=tiny_base,
            rf=RfConfig(num_trees=4, max_features_per_tree=3),
            num_voters=3,
            subset_size=3,
        )

    def test_table_shape(self, split_result, matrix_config):
        result = run_matrix(split_result, matrix_config, threads=1)
        assert [o.name for o in result.outcomes] == ["setting1", "setting2", "setting3", "setting4", "rf"]
        assert [name for name, _ in result.rows()] == ["a", "b", POOLED_ROW]
        markdown = result.to_markdown()
        assert markdown.splitlines()[0].startswith("| Test set | setting1 Acc_e | setting1 A_roc | setting1 A_prc |")
        b_row = next(line for line in markdown.splitlines() if line.startswith("| b |"))
        assert b_row.count(UNDEFINED_CELL) == 15
        assert result.to_csv().splitlines()[0].startswith("test_set,setting1_acc_e,setting1_a_roc")

    def test_pooled_is_concatenation(self, split_result, matrix_config):
        result = run_matrix(split_result, matrix_config, threads=1)
        labels = [s.label for s in split_result.all_tests]
        for outcome in result.outcomes:
            scores = np.concatenate([outcome.scores["a"], outcome.scores["b"]])
            expected = evaluate(scores, labels)
            assert outcome.pooled.a_roc == expected.a_roc
            assert outcome.pooled.a_prc == expected.a_prc

    def test_deterministic(self, split_result, matrix_config):
        first = run_matrix(split_result, matrix_config, threads=1)
        second = run_matrix(split_result, matrix_config, threads=2)
        assert first.to_csv() == second.to_csv()
        assert [o.model_bytes() for o in first.outcomes] == [o.model_bytes() for o in second.outcomes]

    def test_subset_of_settings(self, split_result, matrix_config):
        cfg = matrix_config.model_copy(update={"settings": ["rf"]})
        result = run_matrix(split_result, cfg, threads=1)
        assert result.header() == ["rf Acc_e", "rf A_roc", "rf A_prc"]
