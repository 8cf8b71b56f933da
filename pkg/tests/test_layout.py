"""Layout interchange format: parsing, validation and canonical writing."""

import json

import numpy as np
import pytest

from app.core.layout import LayerConfig, parse_drc, parse_layout, write_drc, write_layout
from app.core.synth import generate_design
from app.errors import LayoutParseError, LayoutValidationError, SchemaError
from app.models.schemas import LayerSpec, SynthConfig


def _bytes(doc) -> bytes:
    return json.dumps(doc).encode("utf-8")


class TestParseLayout:
    def test_minimal_grid(self, layout_doc):
        grid = parse_layout(_bytes(layout_doc(nx=1, ny=1)))
        assert (grid.nx, grid.ny) == (1, 1)
        assert grid.cells == () and grid.pins == ()
        assert grid.congestion.vertical.shape == (1, 1, 0, 2)
        assert grid.congestion.horizontal.shape == (1, 0, 1, 2)
        assert grid.congestion.via.shape == (1, 1, 1, 2)

    def test_pin_with_absent_net(self, layout_doc):
        doc = layout_doc(
            pins=[{"id": "p1", "net": "ghost", "x": 1.0, "y": 1.0}],
            nets=[],
        )
        with pytest.raises(LayoutValidationError) as info:
            parse_layout(_bytes(doc))
        assert info.value.entity == "pin p1"

    def test_malformed_json_reports_offset(self):
        with pytest.raises(LayoutParseError) as info:
            parse_layout(b'{"grid": {"nx": 1,, }')
        assert info.value.offset == 18

    def test_missing_field_reports_path(self, layout_doc):
        doc = layout_doc()
        del doc["grid"]["nx"]
        with pytest.raises(SchemaError) as info:
            parse_layout(_bytes(doc))
        assert info.value.path == "grid.nx"

    def test_wrong_type_reports_path(self, layout_doc):
        doc = layout_doc()
        doc["grid"]["gcell_w"] = "wide"
        with pytest.raises(SchemaError) as info:
            parse_layout(_bytes(doc))
        assert info.value.path == "grid.gcell_w"

    def test_cell_outside_layout(self, layout_doc):
        doc = layout_doc(cells=[{"id": "c1", "x": 15.0, "y": 0.0, "w": 10.0, "h": 1.0}])
        with pytest.raises(LayoutValidationError) as info:
            parse_layout(_bytes(doc))
        assert info.value.entity == "cell c1"

    def test_congestion_size_mismatch(self, layout_doc):
        doc = layout_doc(nx=3, ny=2)
        doc["congestion"]["metal"][0].pop()
        with pytest.raises(LayoutValidationError) as info:
            parse_layout(_bytes(doc))
        assert info.value.entity == "congestion.metal[0]"

    def test_congestion_beyond_int64(self, layout_doc):
        doc = layout_doc(nx=2, ny=1)
        doc["congestion"]["metal"][0] = [[1, 2**64]]
        with pytest.raises(LayoutValidationError) as info:
            parse_layout(_bytes(doc))
        assert info.value.entity == "congestion.metal[0]"

    def test_net_without_pins(self, layout_doc):
        doc = layout_doc(nets=[{"id": "n1", "pins": []}])
        with pytest.raises(LayoutValidationError, match="net n1"):
            parse_layout(_bytes(doc))

    def test_edge_ordering(self, layout_doc):
        doc = layout_doc(nx=2, ny=2)
        # vertical borders row-major, then horizontal borders row-major
        doc["congestion"]["metal"][0] = [[1, 0], [2, 0], [3, 0], [4, 0]]
        grid = parse_layout(_bytes(doc))
        assert grid.congestion.vertical[0, :, 0, 0].tolist() == [1, 2]
        assert grid.congestion.horizontal[0, 0, :, 0].tolist() == [3, 4]


class TestWriteLayout:
    @pytest.mark.parametrize(
        "nx, ny, seed",
        [(1, 1, 0), (1, 5, 1), (6, 1, 2), (2, 2, 3), (8, 8, 4), (7, 5, 5), (12, 9, 6)],
    )
    def test_round_trip_generated_grid(self, nx, ny, seed):
        cfg = SynthConfig(nx=nx, ny=ny, layer_config=LayerSpec(metal=3, via=2), blockage_fraction=0.1, seed=seed)
        grid = generate_design(cfg).grid
        assert parse_layout(write_layout(grid)) == grid

    def test_canonical_bytes(self, small_design):
        assert write_layout(small_design.grid) == write_layout(small_design.grid)

    def test_round_trip_is_stable(self, small_design):
        once = write_layout(small_design.grid)
        assert write_layout(parse_layout(once)) == once


class TestParseDrc:
    def test_empty_list(self):
        assert parse_drc(b"[]").boxes == ()

    def test_one_box(self):
        report = parse_drc(b'[{"x": 1, "y": 2, "w": 3, "h": 4}]')
        assert len(report.boxes) == 1
        assert report.boxes[0].x2 == 4.0

    def test_negative_extent(self):
        with pytest.raises(LayoutValidationError):
            parse_drc(b'[{"x": 1, "y": 2, "w": -1, "h": 4}]')

    def test_round_trip(self):
        report = parse_drc(b'[{"x": 0.5, "y": 2, "w": 3, "h": 4}]')
        assert parse_drc(write_drc(report)) == report


def test_feature_length():
    assert LayerConfig(5, 4).feature_length == 9 * 11 + 3 * 12 * 5 + 3 * 9 * 4 == 387
    with pytest.raises(LayoutValidationError):
        LayerConfig(0, 1)
