"""
Long-running experiments on a seeded synthetic suite.

Skipped unless DRCNET_RUN_SLOW=1.
"""

import numpy as np
import pytest

from app.ai.experiments import run_matrix
from app.core.dataset import split
from app.core.features import extract_design
from app.core.synth import generate_suite_designs
from app.models.schemas import MatrixConfig, RfConfig, SplitSpec, SynthConfig, TrainConfig

SEEDS = (0, 1, 2, 3, 4)


def _pooled_a_roc(seed: int) -> dict[str, float]:
    """
    Pooled A_roc of every setting on one seeded suite.

    Scaled down from the full-size comparison (100 voters, 50 epochs) to 20
    voters, 20 epochs and 32x32 designs. The thresholds below hold for this
    smaller configuration only.
    """
    base = SynthConfig(nx=32, ny=32, target_hotspot_rate=0.03, label_noise=0.05)
    samples = []
    for design in generate_suite_designs(base, 10, seed):
        samples.extend(extract_design(design.grid, design.drc, design.name))
    result = split(samples, SplitSpec(seed=seed))
    cfg = MatrixConfig(
        train=TrainConfig(epochs=20, seed=seed),
        rf=RfConfig(seed=seed),
        num_voters=20,
        subset_size=20,
    )
    outcomes = run_matrix(result, cfg).outcomes
    return {o.name: o.pooled.a_roc for o in outcomes}


@pytest.fixture(scope="module")
def averaged():
    runs = [_pooled_a_roc(seed) for seed in SEEDS]
    return {name: float(np.mean([run[name] for run in runs])) for name in runs[0]}


@pytest.mark.slow
class TestSettingsOrdering:
    def test_more_voters_do_not_hurt(self, averaged):
        assert averaged["setting2"] >= averaged["setting1"]

    def test_pca_and_srs_improve_on_single_voter(self, averaged):
        assert averaged["setting4"] >= averaged["setting1"] + 0.01

    def test_forest_comparable(self, averaged):
        assert abs(averaged["setting4"] - averaged["rf"]) <= 0.15
        assert averaged["setting4"] >= 0.75 and averaged["rf"] >= 0.75
