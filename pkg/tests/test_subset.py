"""Subset-connection layers: largest variance and Smart Random Selection."""

import numpy as np
import pytest

from app.ai.subset import SubsetMask, build_masks, select_largest, srs_select
from app.core.seeding import derive_rng
from app.errors import ConfigError
from app.models.schemas import SelectionConfig


class TestSelectLargest:
    def test_all(self):
        assert select_largest(3, np.array([1.0, 2.0, 3.0])) == [0, 1, 2]

    def test_top_two(self):
        assert select_largest(2, np.array([5.0, 1.0, 3.0])) == [0, 2]

    def test_ties_prefer_lower_index(self):
        assert select_largest(1, np.array([2.0, 2.0, 1.0])) == [0]

    def test_too_many(self):
        with pytest.raises(ConfigError):
            select_largest(4, np.ones(3))


class TestSrsSelect:
    def test_all_indices(self):
        rng = np.random.default_rng(0)
        assert srs_select(4, np.array([0.0, 1.0, 5.0, 0.0]), rng) == [0, 1, 2, 3]

    def test_first_draw_frequencies(self):
        variances = np.array([4.0, 3.0, 3.0])
        rng = np.random.default_rng(7)
        counts = np.bincount([srs_select(1, variances, rng)[0] for _ in range(10_000)], minlength=3)
        np.testing.assert_allclose(counts / 10_000, variances / variances.sum(), rtol=0.05)

    def test_two_feature_probability(self):
        rng = np.random.default_rng(3)
        hits = sum(srs_select(1, np.array([3.0, 1.0]), rng) == [0] for _ in range(20_000))
        assert hits / 20_000 == pytest.approx(0.75, abs=0.02)

    def test_pair_probability(self):
        rng = np.random.default_rng(11)
        trials = 50_000
        hits = sum(srs_select(2, np.array([2.0, 1.0, 1.0]), rng) == [0, 1] for _ in range(trials))
        assert hits / trials == pytest.approx(5 / 12, abs=0.02)

    def test_zero_variance_never_chosen_first(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            assert srs_select(2, np.array([0.0, 1.0, 2.0, 0.0]), rng) == [1, 2]

    def test_uniform_fallback(self):
        rng = np.random.default_rng(6)
        picks = {srs_select(3, np.array([1.0, 0.0, 0.0, 0.0]), rng)[1] for _ in range(200)}
        assert picks == {1, 2}

    def test_too_many(self):
        with pytest.raises(ConfigError):
            srs_select(3, np.ones(2), np.random.default_rng(0))


class TestBuildMasks:
    def test_mode_all(self):
        masks = build_masks(SelectionConfig(mode="all", num_voters=1), np.ones(387))
        assert masks == [SubsetMask(tuple(range(387)))]

    def test_largest_variance_identical(self):
        variances = np.linspace(2.0, 0.0, 50)
        masks = build_masks(SelectionConfig(mode="largest_variance", subset_size=20, num_voters=100), variances)
        assert len(masks) == 100 and len(set(masks)) == 1
        assert masks[0].indices == tuple(range(20))

    def test_srs_distinct(self):
        variances = np.linspace(3.0, 0.1, 60)
        for seed in range(3):
            masks = build_masks(SelectionConfig(mode="srs", subset_size=20, num_voters=100, seed=seed), variances)
            assert len(masks) == 100 and len(set(masks)) >= 2
            assert all(m.size == 20 for m in masks)

    def test_srs_per_voter_streams(self):
        variances = np.linspace(3.0, 0.1, 60)
        few = build_masks(SelectionConfig(mode="srs", subset_size=5, num_voters=3, seed=1), variances)
        many = build_masks(SelectionConfig(mode="srs", subset_size=5, num_voters=10, seed=1), variances)
        assert many[:3] == few
        assert few[2].indices == tuple(srs_select(5, variances, derive_rng(1, "srs", 2)))

    def test_weight_matrix(self):
        matrix, bias = SubsetMask((1, 3)).weights(4)
        assert matrix.tolist() == [[0, 1, 0, 0], [0, 0, 0, 1]]
        assert not bias.any()

    def test_mask_rejects_repeats(self):
        with pytest.raises(ConfigError):
            SubsetMask((1, 1))
