"""Ensemble assembly, soft voting and model files."""

import json

import numpy as np
import pytest

from app.ai.ensemble import EnsembleModel, classify, load_model, predict, save_model, train, voter_outputs
from app.ai.pca import PcaModel
from app.ai.subset import SubsetMask
from app.ai.voter import VoterNet
from app.core.dataset import NormStats
from app.errors import DataError, DimensionError, ModelFormatError
from app.models.schemas import SelectionConfig, TrainConfig


def _fixed_ensemble(probabilities, width=3):
    """Zero-weight voters whose output is fixed by the output bias."""
    voters = []
    for p in probabilities:
        zero = VoterNet.zeros(width, hidden_units=4)
        voters.append(VoterNet(W1=zero.W1, b1=zero.b1, w2=zero.w2, b2=float(np.log(p / (1 - p)))))
    return EnsembleModel(
        norm=NormStats(np.zeros(width), np.ones(width)),
        pca=PcaModel(np.eye(width), np.ones(width)),
        masks=[SubsetMask(tuple(range(width)))] * len(probabilities),
        voters=voters,
    )


def _config(base, mode="all", num_voters=1, subset_size=None):
    return base.model_copy(update={
        "num_voters": num_voters,
        "selection": SelectionConfig(mode=mode, subset_size=subset_size, num_voters=num_voters),
    })


class TestSoftVoting:
    def test_sum_of_voter_probabilities(self):
        model = _fixed_ensemble([0.2, 0.4, 0.9])
        scores = predict(model, np.zeros((2, 3)))
        np.testing.assert_allclose(scores, [1.5, 1.5], atol=1e-12)

    def test_zero_voters_score_half_each(self):
        model = _fixed_ensemble([0.5] * 4)
        np.testing.assert_array_equal(predict(model, np.ones((1, 3))), [2.0])

    def test_voter_outputs_shape(self):
        outputs = voter_outputs(_fixed_ensemble([0.2, 0.4]), np.zeros((5, 3)))
        assert outputs.shape == (5, 2)

    def test_classify_is_strict(self):
        np.testing.assert_array_equal(classify([0.2, 0.5, 0.9], 0.5), [False, False, True])

    def test_wrong_width(self):
        with pytest.raises(DimensionError):
            predict(_fixed_ensemble([0.3]), np.zeros((2, 4)))

    def test_mask_width_mismatch(self):
        model = _fixed_ensemble([0.3])
        with pytest.raises(ModelFormatError):
            EnsembleModel(norm=model.norm, pca=model.pca, masks=[SubsetMask((0, 1))], voters=model.voters)


class TestTrain:
    def test_single_voter_without_pca(self, samples_factory, tiny_train_config):
        model = train(samples_factory(80), _config(tiny_train_config))
        assert model.num_voters == 1
        assert model.masks == [SubsetMask(tuple(range(6)))]
        np.testing.assert_array_equal(model.pca.components, np.eye(6))
        assert model.meta["num_train_samples"] == 80

    def test_scores_within_voter_count(self, samples_factory, tiny_train_config):
        samples = samples_factory(80)
        model = train(samples, _config(tiny_train_config, "srs", num_voters=4, subset_size=3))
        scores = predict(model, samples)
        assert ((scores >= 0) & (scores <= 4)).all()

    def test_largest_variance_masks_identical(self, samples_factory, tiny_train_config):
        model = train(samples_factory(80), _config(tiny_train_config, "largest_variance", 3, 2))
        assert len(set(model.masks)) == 1
        assert model.masks[0] == SubsetMask((0, 1))

    def test_srs_masks_differ(self, samples_factory, tiny_train_config):
        model = train(samples_factory(80), _config(tiny_train_config, "srs", num_voters=6, subset_size=3))
        assert len(set(model.masks)) > 1
        assert all(mask.size == 3 for mask in model.masks)

    def test_deterministic_bytes(self, samples_factory, tiny_train_config):
        cfg = _config(tiny_train_config, "srs", num_voters=3, subset_size=3)
        samples = samples_factory(60)
        assert save_model(train(samples, cfg)) == save_model(train(samples, cfg))

    def test_thread_count_does_not_change_model(self, samples_factory, tiny_train_config):
        cfg = _config(tiny_train_config, "srs", num_voters=3, subset_size=3)
        samples = samples_factory(60)
        assert train(samples, cfg, threads=1) == train(samples, cfg, threads=2)

    def test_seed_changes_model(self, samples_factory, tiny_train_config):
        samples = samples_factory(60)
        a = train(samples, _config(tiny_train_config))
        b = train(samples, _config(tiny_train_config.model_copy(update={"seed": 2})))
        assert a != b

    def test_single_sample_rejected(self, samples_factory, tiny_train_config):
        with pytest.raises(DataError):
            train(samples_factory(1), tiny_train_config)

    def test_learns_signal(self, samples_factory):
        from app.ai.metrics import evaluate

        cfg = TrainConfig(epochs=40, hidden_units=10, learning_rate=0.01, seed=0)
        samples = samples_factory(300)
        model = train(samples, cfg)
        report = evaluate(predict(model, samples), [s.label for s in samples])
        assert report.a_roc > 0.9


class TestModelFile:
    @pytest.fixture
    def model(self, samples_factory, tiny_train_config):
        return train(samples_factory(60), _config(tiny_train_config, "srs", num_voters=2, subset_size=4))

    def test_round_trip(self, model, samples_factory):
        loaded = load_model(save_model(model))
        assert loaded == model
        samples = samples_factory(20, seed=9)
        np.testing.assert_array_equal(predict(loaded, samples), predict(model, samples))

    def test_truncated(self, model):
        data = save_model(model)
        with pytest.raises(ModelFormatError):
            load_model(data[: len(data) // 2])

    def test_version_mismatch(self, model):
        document = json.loads(save_model(model))
        document["version"] = 999
        with pytest.raises(ModelFormatError):
            load_model(json.dumps(document))

    def test_non_orthonormal_pca(self, model):
        document = json.loads(save_model(model))
        document["pca"]["components"][0][0] += 0.5
        with pytest.raises(ModelFormatError):
            load_model(json.dumps(document))

    def test_mask_out_of_range(self, model):
        document = json.loads(save_model(model))
        document["masks"][0][-1] = 99
        with pytest.raises(ModelFormatError):
            load_model(json.dumps(document))
