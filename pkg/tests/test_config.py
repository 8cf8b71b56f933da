"""Settings, config files, logging setup and seed derivation."""

import json

import numpy as np
import pytest
from pydantic import ValidationError

from app.config import get_settings
from app.core.logs import configure_logging
from app.core.seeding import derive_rng, derive_seed
from app.errors import ConfigError, UsageError
from app.models.schemas import MatrixConfig, SelectionConfig, SplitSpec, TrainConfig, load_config


@pytest.fixture
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


class TestSettings:
    def test_defaults(self, fresh_settings, monkeypatch):
        monkeypatch.delenv("DRCNET_THREADS", raising=False)
        settings = get_settings()
        assert settings.threads >= 1
        assert settings.model_format_version == 1

    def test_environment_override(self, fresh_settings, monkeypatch):
        monkeypatch.setenv("DRCNET_THREADS", "3")
        monkeypatch.setenv("DRCNET_DEFAULT_SEED", "17")
        settings = get_settings()
        assert (settings.threads, settings.default_seed) == (3, 17)


class TestLoadConfig:
    def test_defaults_without_file(self):
        assert load_config(TrainConfig) == TrainConfig()

    def test_overrides_skip_none(self, tmp_path):
        path = tmp_path / "train.json"
        path.write_text(json.dumps({"epochs": 7, "seed": 3}))
        cfg = load_config(TrainConfig, path, seed=None, learning_rate=0.01)
        assert (cfg.epochs, cfg.seed, cfg.learning_rate) == (7, 3, 0.01)

    def test_nested_partial(self, tmp_path):
        path = tmp_path / "matrix.json"
        path.write_text(json.dumps({"train": {"epochs": 2}, "num_voters": 4}))
        cfg = load_config(MatrixConfig, path)
        assert cfg.train.epochs == 2 and cfg.train.hidden_units == 20 and cfg.num_voters == 4

    @pytest.mark.parametrize(
        "document, fragment",
        [
            ({"epochs": 0}, "epochs"),
            ({"unknown": 1}, "unknown"),
            ({"selection": {"mode": "random"}}, "selection.mode"),
        ],
    )
    def test_invalid_values(self, tmp_path, document, fragment):
        path = tmp_path / "train.json"
        path.write_text(json.dumps(document))
        with pytest.raises(ConfigError, match=fragment):
            load_config(TrainConfig, path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "split.json"
        path.write_text("{\"train_frac\": ")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_config(SplitSpec, path)

    def test_not_an_object(self, tmp_path):
        path = tmp_path / "split.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            load_config(SplitSpec, path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(UsageError):
            load_config(SplitSpec, tmp_path / "absent.json")

    def test_pca_follows_mode(self):
        assert not TrainConfig().pca_enabled
        assert TrainConfig(selection={"mode": "srs", "subset_size": 2}).pca_enabled
        assert TrainConfig(use_pca=True).pca_enabled

    def test_selection_voters_follow_config(self):
        assert TrainConfig(num_voters=7).selection.num_voters == 7

    def test_selection_voters_overridden_on_input(self):
        cfg = TrainConfig(num_voters=3, selection={"mode": "srs", "subset_size": 2, "num_voters": 9})
        assert cfg.selection.num_voters == 3
        assert cfg.selection.mode == "srs"
        assert TrainConfig(selection=SelectionConfig(num_voters=5)).selection.num_voters == 1
        with pytest.raises(ValidationError):
            cfg.num_voters = 4


class TestLogging:
    def test_unknown_level(self):
        with pytest.raises(UsageError):
            configure_logging("CHATTY")

    def test_level_applied(self):
        import logging

        root = logging.getLogger()
        previous = root.level
        try:
            configure_logging("warning")
            assert root.level == logging.WARNING
        finally:
            root.setLevel(previous)


class TestSeeding:
    def test_same_key_same_stream(self):
        assert derive_rng(4, "voter", 2).random() == derive_rng(4, "voter", 2).random()

    def test_keys_are_independent(self):
        draws = {derive_rng(4, "voter", i).random() for i in range(10)}
        assert len(draws) == 10
        assert derive_rng(4, "voter", 0).random() != derive_rng(4, "tree", 0).random()

    def test_derived_seed_is_64_bit(self):
        seed = derive_seed(9, 3)
        assert 0 <= seed < 2**64
        assert seed == derive_seed(9, 3) != derive_seed(10, 3)

    def test_negative_key_rejected(self):
        with pytest.raises(ValueError):
            derive_rng(1, -1)

    def test_generator_type(self):
        assert isinstance(derive_rng(0), np.random.Generator)
