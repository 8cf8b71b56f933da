"""
Feature Extraction

Per-g-cell raw features over the 3x3 window around every g-cell, and
hotspot labels from DRC error boxes.

Window feature layout (length 99 + 36*M + 27*V):
  9 window g-cells, row-major from (-1, -1) to (+1, +1), 11 features each:
    center-x, center-y (normalised by layout width/height), std cells fully
    within, pins, clock pins, local nets, pins in local nets, NDR pins,
    mean pairwise pin distance, blockage area fraction, cell area fraction
  per metal layer: 12 interior window borders (6 vertical row-major, then
    6 horizontal row-major) x (C, L, C - L)
  per via layer: 9 window g-cells row-major x (C, L, C - L)
"""

import csv
import io
import json
import logging
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from app.core.layout import GCELL_FEATURES, DrcReport, LayoutGrid, Rect
from app.errors import DataError, DimensionError

logger = logging.getLogger(__name__)

# Column offsets inside the 11 per-g-cell features.
CENTER_X, CENTER_Y, CELLS, PINS, CLOCK_PINS, LOCAL_NETS, LOCAL_NET_PINS, NDR_PINS, PIN_SPACING, BLOCKAGE_AREA, CELL_AREA = range(
    GCELL_FEATURES
)

FULL_COVERAGE = 1.0 - 1e-12


@dataclass(frozen=True, eq=False)
class Sample:
    """One g-cell: its window features and hotspot label."""
    design_id: str
    gcell: tuple[int, int]
    features: np.ndarray
    label: bool

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.design_id, self.gcell[0], self.gcell[1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Sample):
            return NotImplemented
        return (
            self.key == other.key
            and self.label == other.label
            and np.array_equal(self.features, other.features)
        )

    __hash__ = None  # type: ignore[assignment]


def _union_area(rects: list[tuple[float, float, float, float]]) -> float:
    """Area of the union of axis-aligned rectangles given as (x1, y1, x2, y2)."""
    if not rects:
        return 0.0
    if len(rects) == 1:
        x1, y1, x2, y2 = rects[0]
        return (x2 - x1) * (y2 - y1)
    xs = sorted({r[0] for r in rects} | {r[2] for r in rects})
    ys = sorted({r[1] for r in rects} | {r[3] for r in rects})
    area = 0.0
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            mx, my = (xs[i] + xs[i + 1]) / 2, (ys[j] + ys[j + 1]) / 2
            if any(r[0] <= mx <= r[2] and r[1] <= my <= r[3] for r in rects):
                area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j])
    return area


def gcell_overlaps(grid: LayoutGrid, rect: Rect):
    """(col, row, overlap area) for every g-cell the rectangle overlaps with positive area."""
    gw, gh = grid.gcell_width, grid.gcell_height
    if rect.w <= 0 or rect.h <= 0:
        return
    c0 = max(int(np.floor(rect.x / gw)), 0)
    c1 = min(int(np.ceil(rect.x2 / gw)) - 1, grid.nx - 1)
    r0 = max(int(np.floor(rect.y / gh)), 0)
    r1 = min(int(np.ceil(rect.y2 / gh)) - 1, grid.ny - 1)
    for r in range(r0, r1 + 1):
        dy = min(rect.y2, (r + 1) * gh) - max(rect.y, r * gh)
        if dy <= 0:
            continue
        for c in range(c0, c1 + 1):
            dx = min(rect.x2, (c + 1) * gw) - max(rect.x, c * gw)
            if dx > 0:
                yield c, r, dx * dy


def _sum_abs_pairwise(values: np.ndarray) -> float:
    """Sum of |v_i - v_j| over all unordered pairs."""
    n = len(values)
    ordered = np.sort(values)
    return float(np.dot(ordered, 2 * np.arange(n) - n + 1))


class FeatureExtractor:
    """
    Window feature extractor for one layout.

    The per-g-cell table and zero-padded congestion arrays are computed
    once; `window()` then slices them for any g-cell.
    """

    def __init__(self, grid: LayoutGrid):
        self.grid = grid
        self.table = self._gcell_table()
        congestion = grid.congestion
        self._vertical = np.pad(congestion.vertical, ((0, 0), (1, 1), (1, 1), (0, 0))).astype(np.float64)
        self._horizontal = np.pad(congestion.horizontal, ((0, 0), (1, 1), (1, 1), (0, 0))).astype(np.float64)
        self._via = np.pad(congestion.via, ((0, 0), (1, 1), (1, 1), (0, 0))).astype(np.float64)
        self._padded_table = np.pad(self.table, ((1, 1), (1, 1), (0, 0)))

    # ----- per-g-cell table -----

    def _gcell_table(self) -> np.ndarray:
        grid = self.grid
        nx, ny = grid.nx, grid.ny
        gw, gh = grid.gcell_width, grid.gcell_height
        table = np.zeros((ny, nx, GCELL_FEATURES), dtype=np.float64)

        cols = np.arange(nx)
        rows = np.arange(ny)
        table[:, :, CENTER_X] = ((cols + 0.5) * gw / grid.width)[None, :]
        table[:, :, CENTER_Y] = ((rows + 0.5) * gh / grid.height)[:, None]

        self._count_cells(table)
        self._count_pins(table)
        table[:, :, BLOCKAGE_AREA] = self._blockage_fraction()
        return table

    def _count_cells(self, table: np.ndarray) -> None:
        grid = self.grid
        gw, gh = grid.gcell_width, grid.gcell_height
        cell_area = np.zeros((grid.ny, grid.nx))
        for cell in grid.cells:
            rect = cell.rect
            col, row = int(np.floor(rect.x / gw)), int(np.floor(rect.y / gh))
            if (
                col < grid.nx
                and row < grid.ny
                and rect.x2 <= (col + 1) * gw
                and rect.y2 <= (row + 1) * gh
            ):
                table[row, col, CELLS] += 1
            for c, r, area in gcell_overlaps(grid, rect):
                cell_area[r, c] += area
        table[:, :, CELL_AREA] = np.minimum(cell_area / (gw * gh), 1.0)

    def _count_pins(self, table: np.ndarray) -> None:
        grid = self.grid
        if not grid.pins:
            return
        ndr_nets = {net.id for net in grid.nets if net.has_ndr}
        xs = np.array([p.x for p in grid.pins])
        ys = np.array([p.y for p in grid.pins])
        cols = np.clip(np.floor(xs / grid.gcell_width).astype(np.int64), 0, grid.nx - 1)
        rows = np.clip(np.floor(ys / grid.gcell_height).astype(np.int64), 0, grid.ny - 1)
        clock = np.array([p.is_clock for p in grid.pins], dtype=np.float64)
        ndr = np.array([p.net in ndr_nets for p in grid.pins], dtype=np.float64)

        np.add.at(table[:, :, PINS], (rows, cols), 1.0)
        np.add.at(table[:, :, CLOCK_PINS], (rows, cols), clock)
        np.add.at(table[:, :, NDR_PINS], (rows, cols), ndr)

        index = {p.id: i for i, p in enumerate(grid.pins)}
        for net in grid.nets:
            members = [index[pin_id] for pin_id in net.pins]
            places = {(int(rows[i]), int(cols[i])) for i in members}
            if len(places) == 1:
                (r, c), = places
                table[r, c, LOCAL_NETS] += 1
                table[r, c, LOCAL_NET_PINS] += len(members)

        flat = rows * grid.nx + cols
        order = np.argsort(flat, kind="stable")
        boundaries = np.flatnonzero(np.diff(flat[order])) + 1
        for group in np.split(order, boundaries):
            n = len(group)
            if n < 2:
                continue
            total = _sum_abs_pairwise(xs[group]) + _sum_abs_pairwise(ys[group])
            r, c = int(rows[group[0]]), int(cols[group[0]])
            table[r, c, PIN_SPACING] = total / (n * (n - 1) / 2)

    def _blockage_fraction(self) -> np.ndarray:
        grid = self.grid
        pieces: dict[tuple[int, int], list[tuple[float, float, float, float]]] = defaultdict(list)
        gw, gh = grid.gcell_width, grid.gcell_height
        for rect in grid.blockages:
            for c, r, _ in gcell_overlaps(grid, rect):
                pieces[(c, r)].append((
                    max(rect.x, c * gw), max(rect.y, r * gh),
                    min(rect.x2, (c + 1) * gw), min(rect.y2, (r + 1) * gh),
                ))
        fraction = np.zeros((grid.ny, grid.nx))
        for (c, r), rects in pieces.items():
            fraction[r, c] = min(_union_area(rects) / (gw * gh), 1.0)
        return fraction

    # ----- window -----

    def gcell_features(self, col: int, row: int) -> np.ndarray:
        """The 11 features of a single g-cell (zeros outside the layout)."""
        if not self.grid.contains_gcell(col, row):
            return np.zeros(GCELL_FEATURES)
        return self.table[row, col].copy()

    def window(self, col: int, row: int) -> np.ndarray:
        if not self.grid.contains_gcell(col, row):
            raise DimensionError(f"g-cell ({col}, {row}) outside {self.grid.nx}x{self.grid.ny} grid")
        cells = self._padded_table[row:row + 3, col:col + 3].reshape(-1)

        vertical = self._vertical[:, row:row + 3, col:col + 2].reshape(self._vertical.shape[0], 6, 2)
        horizontal = self._horizontal[:, row:row + 2, col:col + 3].reshape(self._horizontal.shape[0], 6, 2)
        metal = np.concatenate([vertical, horizontal], axis=1)
        via = self._via[:, row:row + 3, col:col + 3].reshape(self._via.shape[0], 9, 2)

        return np.concatenate([cells, _with_slack(metal).reshape(-1), _with_slack(via).reshape(-1)])

    def covered(self, col: int, row: int) -> bool:
        """True when blockages cover the whole g-cell."""
        return self.table[row, col, BLOCKAGE_AREA] >= FULL_COVERAGE


def _with_slack(pairs: np.ndarray) -> np.ndarray:
    """(..., 2) capacity/load pairs -> (..., 3) with C - L appended."""
    return np.concatenate([pairs, (pairs[..., 0] - pairs[..., 1])[..., None]], axis=-1)


def extract_features(grid: LayoutGrid, gcell: tuple[int, int]) -> np.ndarray:
    """
    Raw window feature vector of one g-cell.

    Args:
        grid: Parsed layout
        gcell: (col, row) of the central g-cell

    Returns:
        Vector of length grid.feature_length
    """
    col, row = gcell
    if not grid.contains_gcell(col, row):
        raise DimensionError(f"g-cell ({col}, {row}) outside {grid.nx}x{grid.ny} grid")
    return FeatureExtractor(grid).window(col, row)


def label_gcells(grid: LayoutGrid, drc: DrcReport) -> np.ndarray:
    """Boolean array indexed [col, row]; true where a DRC box overlaps with positive area."""
    labels = np.zeros((grid.nx, grid.ny), dtype=bool)
    for box in drc.boxes:
        for col, row, _ in gcell_overlaps(grid, box):
            labels[col, row] = True
    return labels


def extract_design(grid: LayoutGrid, drc: DrcReport, design_id: str) -> list[Sample]:
    """
    Samples for every g-cell of a design in row-major order.

    G-cells entirely covered by blockages/macros are excluded.
    """
    extractor = FeatureExtractor(grid)
    labels = label_gcells(grid, drc)
    samples = []
    excluded = 0
    for row in range(grid.ny):
        for col in range(grid.nx):
            if extractor.covered(col, row):
                excluded += 1
                continue
            samples.append(Sample(design_id, (col, row), extractor.window(col, row), bool(labels[col, row])))
    positives = sum(s.label for s in samples)
    logger.info(
        "%s: %d samples (%d positive), %d macro-covered g-cells excluded",
        design_id, len(samples), positives, excluded,
    )
    return samples


# ============= Sample files =============

def write_samples_jsonl(samples: list[Sample]) -> bytes:
    """One JSON object per line: {design, col, row, label, features}."""
    out = io.StringIO()
    for s in samples:
        out.write(json.dumps(
            {"design": s.design_id, "col": s.gcell[0], "row": s.gcell[1], "label": s.label, "features": s.features.tolist()},
            sort_keys=True, separators=(",", ":"),
        ))
        out.write("\n")
    return out.getvalue().encode("utf-8")


def read_samples_jsonl(document: bytes | str) -> list[Sample]:
    text = document.decode("utf-8") if isinstance(document, bytes) else document
    samples = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            features = np.asarray(obj["features"], dtype=np.float64)
            sample = Sample(str(obj["design"]), (int(obj["col"]), int(obj["row"])), features, bool(obj["label"]))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise DataError(f"sample line {lineno}: {e}") from None
        if width is None:
            width = len(features)
        elif len(features) != width:
            raise DimensionError(f"sample line {lineno}: {len(features)} features, expected {width}")
        samples.append(sample)
    return samples


def write_samples_csv(samples: list[Sample]) -> bytes:
    """CSV with header f000..fNNN,label,design,col,row."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    width = len(samples[0].features) if samples else 0
    digits = max(3, len(str(max(width - 1, 0))))
    writer.writerow([f"f{i:0{digits}d}" for i in range(width)] + ["label", "design", "col", "row"])
    for s in samples:
        writer.writerow([repr(float(v)) for v in s.features] + [int(s.label), s.design_id, s.gcell[0], s.gcell[1]])
    return out.getvalue().encode("utf-8")


def stack(samples: list[Sample]) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix (n, N) and boolean label vector (n,)."""
    if not samples:
        return np.zeros((0, 0)), np.zeros(0, dtype=bool)
    X = np.vstack([s.features for s in samples])
    y = np.array([s.label for s in samples], dtype=bool)
    return X, y
