"""Synthetic layout generator."""

import numpy as np
import pytest

from app.core.features import extract_design, label_gcells
from app.core.layout import write_drc, write_layout
from app.core.seeding import derive_seed
from app.core.synth import generate, generate_design, generate_suite, generate_suite_designs
from app.errors import GenerationError
from app.models.schemas import LayerSpec, SynthConfig


class TestGenerate:
    def test_deterministic(self, small_synth_config):
        grid_a, drc_a = generate(small_synth_config)
        grid_b, drc_b = generate(small_synth_config)
        assert write_layout(grid_a) == write_layout(grid_b)
        assert write_drc(drc_a) == write_drc(drc_b)

    def test_different_seed_differs(self, small_synth_config):
        other = small_synth_config.model_copy(update={"seed": 4})
        assert write_layout(generate(small_synth_config)[0]) != write_layout(generate(other)[0])

    def test_no_blockages_when_fraction_zero(self, small_synth_config):
        grid, _ = generate(small_synth_config)
        assert grid.blockages == ()

    def test_hotspot_rate(self):
        cfg = SynthConfig(
            nx=100, ny=100, layer_config=LayerSpec(metal=2, via=1),
            cells_per_gcell_mean=1.0, pins_per_cell_mean=1.0,
            blockage_fraction=0.0, target_hotspot_rate=0.02, seed=11,
        )
        design = generate_design(cfg)
        assert len(design.hotspots) / (100 * 100) == pytest.approx(0.02, abs=0.005)

    def test_planted_hotspots_are_recovered(self, small_synth_config):
        cfg = small_synth_config.model_copy(update={"blockage_fraction": 0.1, "label_noise": 0.2})
        design = generate_design(cfg)
        labels = label_gcells(design.grid, design.drc)
        assert {(int(c), int(r)) for c, r in zip(*np.nonzero(labels))} == set(design.hotspots)
        samples = extract_design(design.grid, design.drc, "tiny")
        assert sum(s.label for s in samples) == len(design.hotspots)

    def test_label_noise_keeps_count(self, small_synth_config):
        clean = generate_design(small_synth_config)
        noisy = generate_design(small_synth_config.model_copy(update={"label_noise": 0.5}))
        assert len(noisy.hotspots) == len(clean.hotspots)

    def test_drc_boxes_strictly_inside(self, small_design):
        cfg = small_design.config
        for box in small_design.drc.boxes:
            col, row = int(box.x // cfg.gcell_width), int(box.y // cfg.gcell_height)
            assert col * cfg.gcell_width < box.x and box.x2 < (col + 1) * cfg.gcell_width
            assert row * cfg.gcell_height < box.y and box.y2 < (row + 1) * cfg.gcell_height

    def test_fully_covered_design_fails(self):
        cfg = SynthConfig(nx=2, ny=2, blockage_fraction=1.0, seed=0)
        with pytest.raises(GenerationError):
            generate(cfg)


class TestGenerateSuite:
    def test_single_design_matches_generate(self, small_synth_config):
        (name, grid, drc), = generate_suite(small_synth_config, 1, seed=9)
        expected_grid, expected_drc = generate(small_synth_config.model_copy(update={"seed": derive_seed(9, 0)}))
        assert name == "synth_00"
        assert write_layout(grid) == write_layout(expected_grid)
        assert write_drc(drc) == write_drc(expected_drc)

    def test_fourteen_designs(self, small_synth_config):
        designs = generate_suite_designs(small_synth_config, 14, seed=2)
        assert [d.name for d in designs] == [f"synth_{i:02d}" for i in range(14)]
        assert len({d.config.seed for d in designs}) == 14

    def test_suite_hotspot_rate(self, small_synth_config):
        designs = generate_suite_designs(small_synth_config, 6, seed=5)
        rates = [len(d.hotspots) / (d.config.nx * d.config.ny) for d in designs]
        targets = [d.config.target_hotspot_rate for d in designs]
        assert np.mean(rates) == pytest.approx(np.mean(targets), abs=0.015)

    def test_deterministic_in_seed(self, small_synth_config):
        a = generate_suite(small_synth_config, 3, seed=1)
        b = generate_suite(small_synth_config, 3, seed=1)
        assert [write_layout(g) for _, g, _ in a] == [write_layout(g) for _, g, _ in b]

    def test_rejects_empty_suite(self, small_synth_config):
        with pytest.raises(GenerationError):
            generate_suite(small_synth_config, 0, seed=1)
