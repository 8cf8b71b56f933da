"""Shared fixtures and the `slow` marker gate."""

import numpy as np
import pytest

from app.config import get_settings
from app.core.features import Sample
from app.core.synth import generate_design
from app.models.schemas import LayerSpec, SynthConfig, TrainConfig


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long synthetic-suite experiments (run with DRCNET_RUN_SLOW=1)")


def pytest_collection_modifyitems(config, items):
    get_settings.cache_clear()
    if get_settings().run_slow:
        return
    skip = pytest.mark.skip(reason="set DRCNET_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def layout_doc():
    """Factory for layout documents with zeroed congestion."""

    def build(nx=2, ny=2, metal=1, via=1, gcell=10.0, cells=(), pins=(), nets=(), blockages=()):
        edges = (nx - 1) * ny + nx * (ny - 1)
        return {
            "grid": {"nx": nx, "ny": ny, "gcell_w": gcell, "gcell_h": gcell},
            "layers": {"metal": metal, "via": via},
            "cells": list(cells),
            "pins": list(pins),
            "nets": list(nets),
            "blockages": list(blockages),
            "congestion": {
                "metal": [[[0, 0]] * edges for _ in range(metal)],
                "via": [[[0, 0]] * (nx * ny) for _ in range(via)],
            },
        }

    return build


@pytest.fixture
def small_synth_config():
    return SynthConfig(
        nx=8,
        ny=8,
        layer_config=LayerSpec(metal=2, via=1),
        blockage_fraction=0.0,
        target_hotspot_rate=0.1,
        seed=3,
    )


@pytest.fixture
def small_design(small_synth_config):
    return generate_design(small_synth_config, name="tiny")


def make_samples(n, dim=6, seed=0, design="d0", noise=0.0):
    """Samples whose label is a noisy linear threshold of the first two features."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, dim))
    score = X[:, 0] + 0.5 * X[:, 1] + noise * rng.normal(size=n)
    y = score > np.quantile(score, 0.8)
    side = int(np.ceil(np.sqrt(n)))
    return [Sample(design, (i % side, i // side), X[i], bool(y[i])) for i in range(n)]


@pytest.fixture
def samples_factory():
    return make_samples


@pytest.fixture
def tiny_train_config():
    return TrainConfig(epochs=5, batch_size=16, hidden_units=8, seed=1)
