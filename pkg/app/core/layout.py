"""
Layout Model

G-cell grid snapshot of a placed and globally routed design, and the JSON
interchange format used in place of LEF/DEF plus router reports.

Coordinates are layout units with the origin at the lower-left corner;
g-cell indices are (col, row).
"""

import json
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import TypeAdapter, ValidationError

from app.errors import LayoutParseError, LayoutValidationError, SchemaError
from app.models.schemas import LayoutDocument, RectDoc, describe_validation_error, validate_document

logger = logging.getLogger(__name__)

# Per-g-cell window features, see app.core.features.
GCELL_FEATURES = 11
WINDOW_CELLS = 9
WINDOW_EDGES = 12

_DRC_ADAPTER = TypeAdapter(list[RectDoc])


@dataclass(frozen=True)
class LayerConfig:
    """Metal (M) and via (V) layer counts."""
    num_metal_layers: int
    num_via_layers: int

    def __post_init__(self):
        if self.num_metal_layers < 1 or self.num_via_layers < 1:
            raise LayoutValidationError(
                "layers", f"need at least one metal and one via layer, got M={self.num_metal_layers} V={self.num_via_layers}"
            )

    @property
    def feature_length(self) -> int:
        return WINDOW_CELLS * GCELL_FEATURES + 3 * WINDOW_EDGES * self.num_metal_layers + 3 * WINDOW_CELLS * self.num_via_layers


@dataclass(frozen=True)
class Rect:
    x: float
    y: float
    w: float
    h: float

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class StdCell:
    id: str
    rect: Rect


@dataclass(frozen=True)
class Pin:
    id: str
    cell: Optional[str]
    net: str
    x: float
    y: float
    is_clock: bool = False


@dataclass(frozen=True)
class Net:
    id: str
    pins: tuple[str, ...]
    has_ndr: bool = False


@dataclass(frozen=True, eq=False)
class CongestionMap:
    """
    Capacity/load per routing resource; the last axis is (C, L).

    vertical:   (M, ny, nx-1, 2) borders between (c, r) and (c+1, r)
    horizontal: (M, ny-1, nx, 2) borders between (c, r) and (c, r+1)
    via:        (V, ny, nx, 2)   per g-cell
    """
    vertical: np.ndarray
    horizontal: np.ndarray
    via: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CongestionMap):
            return NotImplemented
        return (
            np.array_equal(self.vertical, other.vertical)
            and np.array_equal(self.horizontal, other.horizontal)
            and np.array_equal(self.via, other.via)
        )

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def zeros(cls, nx: int, ny: int, layers: LayerConfig) -> "CongestionMap":
        return cls(
            vertical=np.zeros((layers.num_metal_layers, ny, max(nx - 1, 0), 2), dtype=np.int64),
            horizontal=np.zeros((layers.num_metal_layers, max(ny - 1, 0), nx, 2), dtype=np.int64),
            via=np.zeros((layers.num_via_layers, ny, nx, 2), dtype=np.int64),
        )


@dataclass(frozen=True)
class DrcReport:
    """Bounding boxes of DRC errors."""
    boxes: tuple[Rect, ...] = ()


@dataclass(frozen=True)
class LayoutGrid:
    nx: int
    ny: int
    gcell_width: float
    gcell_height: float
    layer_config: LayerConfig
    congestion: CongestionMap
    cells: tuple[StdCell, ...] = ()
    pins: tuple[Pin, ...] = ()
    nets: tuple[Net, ...] = ()
    blockages: tuple[Rect, ...] = ()

    @property
    def width(self) -> float:
        return self.nx * self.gcell_width

    @property
    def height(self) -> float:
        return self.ny * self.gcell_height

    @property
    def feature_length(self) -> int:
        return self.layer_config.feature_length

    def gcell_rect(self, col: int, row: int) -> Rect:
        return Rect(col * self.gcell_width, row * self.gcell_height, self.gcell_width, self.gcell_height)

    def contains_gcell(self, col: int, row: int) -> bool:
        return 0 <= col < self.nx and 0 <= row < self.ny

    def pin_gcell(self, x: float, y: float) -> tuple[int, int]:
        """G-cell owning a point: lower-left edges inclusive, layout top/right edge folded into the last g-cell."""
        col = min(int(np.floor(x / self.gcell_width)), self.nx - 1)
        row = min(int(np.floor(y / self.gcell_height)), self.ny - 1)
        return max(col, 0), max(row, 0)


# ============= Parsing =============

def _decode(document: bytes | str):
    try:
        return json.loads(document)
    except json.JSONDecodeError as e:
        offset = len(e.doc[: e.pos].encode("utf-8")) if isinstance(e.doc, str) else e.pos
        raise LayoutParseError(f"malformed JSON: {e.msg}", offset) from None
    except UnicodeDecodeError as e:
        raise LayoutParseError(f"document is not UTF-8: {e.reason}", e.start) from None


def _rect(doc: RectDoc) -> Rect:
    return Rect(doc.x, doc.y, doc.w, doc.h)


def _check_inside(entity: str, rect: Rect, width: float, height: float) -> None:
    if rect.w < 0 or rect.h < 0:
        raise LayoutValidationError(entity, f"negative extent w={rect.w} h={rect.h}")
    if rect.x < 0 or rect.y < 0 or rect.x2 > width or rect.y2 > height:
        raise LayoutValidationError(
            entity, f"rectangle ({rect.x}, {rect.y}, {rect.w}, {rect.h}) outside layout {width}x{height}"
        )


def _congestion_layer(entity: str, pairs: list[list[int]], expected: int) -> np.ndarray:
    if len(pairs) != expected:
        raise LayoutValidationError(entity, f"expected {expected} [C, L] entries, got {len(pairs)}")
    try:
        array = np.asarray(pairs, dtype=np.int64).reshape(expected, 2)
    except OverflowError:
        raise LayoutValidationError(entity, "capacity or load does not fit in 64 bits") from None
    if expected and array.min() < 0:
        raise LayoutValidationError(entity, "capacity and load must be non-negative")
    return array


def parse_layout(document: bytes | str) -> LayoutGrid:
    """
    Parse and validate a layout interchange document.

    Args:
        document: JSON bytes

    Returns:
        LayoutGrid with all invariants checked

    Raises:
        LayoutParseError: malformed JSON (carries the byte offset)
        SchemaError: missing field or wrong type (carries the field path)
        LayoutValidationError: broken invariant (names the entity)
    """
    doc = validate_document(LayoutDocument, _decode(document))
    nx, ny = doc.grid.nx, doc.grid.ny
    layers = LayerConfig(doc.layers.metal, doc.layers.via)
    width, height = nx * doc.grid.gcell_w, ny * doc.grid.gcell_h

    cells: list[StdCell] = []
    cell_ids: set[str] = set()
    for cell in doc.cells:
        if cell.id in cell_ids:
            raise LayoutValidationError(f"cell {cell.id}", "duplicate id")
        rect = Rect(cell.x, cell.y, cell.w, cell.h)
        _check_inside(f"cell {cell.id}", rect, width, height)
        cell_ids.add(cell.id)
        cells.append(StdCell(cell.id, rect))

    net_ids = {net.id for net in doc.nets}
    if len(net_ids) != len(doc.nets):
        raise LayoutValidationError("nets", "duplicate net id")

    pins: list[Pin] = []
    pin_net: dict[str, str] = {}
    for pin in doc.pins:
        entity = f"pin {pin.id}"
        if pin.id in pin_net:
            raise LayoutValidationError(entity, "duplicate id")
        if pin.net not in net_ids:
            raise LayoutValidationError(entity, f"references absent net {pin.net!r}")
        if pin.cell is not None and pin.cell not in cell_ids:
            raise LayoutValidationError(entity, f"references absent cell {pin.cell!r}")
        if not (0 <= pin.x <= width and 0 <= pin.y <= height):
            raise LayoutValidationError(entity, f"location ({pin.x}, {pin.y}) outside layout {width}x{height}")
        pin_net[pin.id] = pin.net
        pins.append(Pin(pin.id, pin.cell, pin.net, pin.x, pin.y, pin.clock))

    nets: list[Net] = []
    for net in doc.nets:
        entity = f"net {net.id}"
        if not net.pins:
            raise LayoutValidationError(entity, "lists no pins")
        for pin_id in net.pins:
            if pin_net.get(pin_id) != net.id:
                raise LayoutValidationError(entity, f"lists pin {pin_id!r} that does not belong to it")
        nets.append(Net(net.id, tuple(net.pins), net.ndr))
    listed = sum(len(net.pins) for net in nets)
    if listed != len(pins):
        raise LayoutValidationError("nets", f"{len(pins)} pins declared but nets list {listed}")

    blockages = []
    for i, blockage in enumerate(doc.blockages):
        rect = _rect(blockage)
        _check_inside(f"blockage {i}", rect, width, height)
        blockages.append(rect)

    if len(doc.congestion.metal) != layers.num_metal_layers:
        raise LayoutValidationError("congestion.metal", f"expected {layers.num_metal_layers} layers, got {len(doc.congestion.metal)}")
    if len(doc.congestion.via) != layers.num_via_layers:
        raise LayoutValidationError("congestion.via", f"expected {layers.num_via_layers} layers, got {len(doc.congestion.via)}")

    n_vertical, n_horizontal = (nx - 1) * ny, nx * (ny - 1)
    vertical, horizontal = [], []
    for k, layer in enumerate(doc.congestion.metal):
        edges = _congestion_layer(f"congestion.metal[{k}]", layer, n_vertical + n_horizontal)
        vertical.append(edges[:n_vertical].reshape(ny, nx - 1, 2))
        horizontal.append(edges[n_vertical:].reshape(ny - 1, nx, 2))
    via = [
        _congestion_layer(f"congestion.via[{k}]", layer, nx * ny).reshape(ny, nx, 2)
        for k, layer in enumerate(doc.congestion.via)
    ]

    grid = LayoutGrid(
        nx=nx,
        ny=ny,
        gcell_width=doc.grid.gcell_w,
        gcell_height=doc.grid.gcell_h,
        layer_config=layers,
        cells=tuple(cells),
        pins=tuple(pins),
        nets=tuple(nets),
        blockages=tuple(blockages),
        congestion=CongestionMap(
            vertical=np.stack(vertical),
            horizontal=np.stack(horizontal),
            via=np.stack(via),
        ),
    )
    logger.debug("parsed layout %dx%d: %d cells, %d pins, %d nets", nx, ny, len(cells), len(pins), len(nets))
    return grid


def parse_drc(document: bytes | str) -> DrcReport:
    """Parse a JSON list of DRC error boxes {x, y, w, h}."""
    try:
        docs = _DRC_ADAPTER.validate_python(_decode(document))
    except ValidationError as e:
        raise SchemaError(*describe_validation_error(e)) from None
    boxes = []
    for i, doc in enumerate(docs):
        if doc.w < 0 or doc.h < 0:
            raise LayoutValidationError(f"drc box {i}", f"negative extent w={doc.w} h={doc.h}")
        boxes.append(_rect(doc))
    return DrcReport(tuple(boxes))


# ============= Writing =============

def _dumps(document) -> bytes:
    return json.dumps(document, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")


def _rect_doc(rect: Rect) -> dict:
    return {"x": float(rect.x), "y": float(rect.y), "w": float(rect.w), "h": float(rect.h)}


def write_layout(grid: LayoutGrid) -> bytes:
    """Canonical JSON for a grid; parse_layout(write_layout(g)) == g."""
    congestion = grid.congestion
    metal = []
    for k in range(grid.layer_config.num_metal_layers):
        edges = np.concatenate([congestion.vertical[k].reshape(-1, 2), congestion.horizontal[k].reshape(-1, 2)])
        metal.append(edges.tolist())
    via = [congestion.via[k].reshape(-1, 2).tolist() for k in range(grid.layer_config.num_via_layers)]

    document = {
        "grid": {"nx": grid.nx, "ny": grid.ny, "gcell_w": float(grid.gcell_width), "gcell_h": float(grid.gcell_height)},
        "layers": {"metal": grid.layer_config.num_metal_layers, "via": grid.layer_config.num_via_layers},
        "cells": [{"id": c.id, **_rect_doc(c.rect)} for c in grid.cells],
        "pins": [
            {"id": p.id, "cell": p.cell, "net": p.net, "x": float(p.x), "y": float(p.y), "clock": p.is_clock}
            for p in grid.pins
        ],
        "nets": [{"id": n.id, "pins": list(n.pins), "ndr": n.has_ndr} for n in grid.nets],
        "blockages": [_rect_doc(b) for b in grid.blockages],
        "congestion": {"metal": metal, "via": via},
    }
    return _dumps(document)


def write_drc(report: DrcReport) -> bytes:
    return _dumps([_rect_doc(box) for box in report.boxes])
