"""
Synthetic Layout Generator

Seeded stand-in for a placed and globally routed benchmark suite: cells,
pins and nets follow a smooth density field, congestion load follows local
pin density, and DRC hotspots are planted where a latent score built from
overflow and pin count is highest.
"""

import logging
from dataclasses import dataclass

import numpy as np

from app.core.layout import (
    CongestionMap,
    DrcReport,
    LayerConfig,
    LayoutGrid,
    Net,
    Pin,
    Rect,
    StdCell,
)
from app.core.seeding import derive_rng, derive_seed
from app.errors import GenerationError
from app.models.schemas import SynthConfig

logger = logging.getLogger(__name__)

# Latent hotspot score: ALPHA * overflow + BETA * pin count + noise.
ALPHA = 1.0
BETA = 0.5
SCORE_NOISE = 1.0

# Routing demand as a fraction of capacity at average pin density.
DEMAND_RATIO = 0.75
VIA_DEMAND_RATIO = 0.6


@dataclass(frozen=True)
class SyntheticDesign:
    name: str
    config: SynthConfig
    grid: LayoutGrid
    drc: DrcReport
    hotspots: frozenset[tuple[int, int]]


def _place_macros(cfg: SynthConfig, rng: np.random.Generator) -> tuple[list[Rect], np.ndarray]:
    """Grid-aligned macros until the covered fraction is reached, plus partial placement blockages."""
    nx, ny, gw, gh = cfg.nx, cfg.ny, cfg.gcell_width, cfg.gcell_height
    covered = np.zeros((ny, nx), dtype=bool)
    blockages: list[Rect] = []
    target = int(round(cfg.blockage_fraction * nx * ny))
    if target == 0:
        return blockages, covered

    max_side = max(1, min(4, nx // 4, ny // 4))
    attempts = 0
    while covered.sum() < target and attempts < 10 * nx * ny:
        attempts += 1
        w = int(rng.integers(1, max_side + 1))
        h = int(rng.integers(1, max_side + 1))
        c = int(rng.integers(0, nx - w + 1))
        r = int(rng.integers(0, ny - h + 1))
        if covered[r:r + h, c:c + w].any():
            continue
        covered[r:r + h, c:c + w] = True
        blockages.append(Rect(c * gw, r * gh, w * gw, h * gh))

    for _ in range(max(1, target // 2)):
        c, r = int(rng.integers(0, nx)), int(rng.integers(0, ny))
        if covered[r, c]:
            continue
        w, h = gw * rng.uniform(0.2, 0.8), gh * rng.uniform(0.2, 0.8)
        x = c * gw + rng.uniform(0, gw - w)
        y = r * gh + rng.uniform(0, gh - h)
        blockages.append(Rect(x, y, w, h))
    return blockages, covered


def _density_field(nx: int, ny: int, rng: np.random.Generator) -> np.ndarray:
    """Smooth positive field with mean 1, shape (ny, nx)."""
    rows, cols = np.mgrid[0:ny, 0:nx]
    field = np.full((ny, nx), 0.5)
    for _ in range(max(2, nx * ny // 64)):
        cx, cy = rng.uniform(0, nx), rng.uniform(0, ny)
        sigma = rng.uniform(1.5, 4.0)
        amplitude = rng.uniform(0.5, 2.0)
        field += amplitude * np.exp(-((cols + 0.5 - cx) ** 2 + (rows + 0.5 - cy) ** 2) / (2 * sigma**2))
    return field / field.mean()


def _place_cells(cfg: SynthConfig, density: np.ndarray, covered: np.ndarray, rng: np.random.Generator):
    nx, ny, gw, gh = cfg.nx, cfg.ny, cfg.gcell_width, cfg.gcell_height
    width, height = nx * gw, ny * gh
    counts = rng.poisson(cfg.cells_per_gcell_mean * density)
    counts[covered] = 0

    cells: list[StdCell] = []
    pin_specs: list[tuple[str | None, float, float]] = []
    row_height = gh / 8
    for r in range(ny):
        for c in range(nx):
            for _ in range(int(counts[r, c])):
                w = gw * rng.uniform(0.08, 0.25)
                h = row_height
                x = min(max(c * gw + rng.uniform(-w / 2, gw - w / 2), 0.0), width - w)
                y = min(max(r * gh + rng.uniform(0, gh - h), 0.0), height - h)
                cell_id = f"c{len(cells)}"
                cells.append(StdCell(cell_id, Rect(x, y, w, h)))
                for _ in range(max(1, int(rng.poisson(cfg.pins_per_cell_mean)))):
                    pin_specs.append((cell_id, x + rng.uniform(0, w), y + rng.uniform(0, h)))

    for _ in range(max(1, (nx + ny) // 4)):
        if rng.random() < 0.5:
            pin_specs.append((None, 0.0, rng.uniform(0, height)))
        else:
            pin_specs.append((None, rng.uniform(0, width), 0.0))
    return cells, pin_specs


def _wire_nets(cfg: SynthConfig, pin_specs, rng: np.random.Generator) -> tuple[list[Pin], list[Net]]:
    """Chunk spatially ordered pins into nets of 2-5 pins, so most nets are short and many are local."""
    gw, gh = cfg.gcell_width, cfg.gcell_height
    xs = np.array([p[1] for p in pin_specs])
    ys = np.array([p[2] for p in pin_specs])
    keys = (np.floor(ys / gh) + rng.normal(0, 0.3, len(ys))) * cfg.nx + np.floor(xs / gw) + rng.normal(0, 0.6, len(xs))
    order = np.argsort(keys, kind="stable")

    net_of = np.empty(len(pin_specs), dtype=np.int64)
    nets_members: list[list[int]] = []
    position = 0
    while position < len(order):
        size = int(rng.integers(2, 6))
        members = order[position:position + size].tolist()
        net_of[members] = len(nets_members)
        nets_members.append(members)
        position += size

    clock = rng.random(len(pin_specs)) < cfg.clock_pin_fraction
    ndr = rng.random(len(nets_members)) < cfg.ndr_net_fraction
    pins = [
        Pin(f"p{i}", cell, f"n{net_of[i]}", float(x), float(y), bool(clock[i]))
        for i, (cell, x, y) in enumerate(pin_specs)
    ]
    nets = [
        Net(f"n{j}", tuple(f"p{i}" for i in sorted(members)), bool(ndr[j]))
        for j, members in enumerate(nets_members)
    ]
    return pins, nets


def _route(cfg: SynthConfig, layers: LayerConfig, pin_counts: np.ndarray, covered: np.ndarray, rng: np.random.Generator) -> CongestionMap:
    """Capacities by layer direction, loads Poisson around density-scaled demand."""
    nx, ny = cfg.nx, cfg.ny
    base = cfg.congestion_base_capacity
    open_cells = ~covered
    mean_pins = pin_counts[open_cells].mean() if open_cells.any() else 0.0
    demand = pin_counts / mean_pins if mean_pins > 0 else np.zeros_like(pin_counts, dtype=float)

    congestion = CongestionMap.zeros(nx, ny, layers)
    v_open = open_cells[:, :-1] & open_cells[:, 1:]
    h_open = open_cells[:-1, :] & open_cells[1:, :]
    v_demand = (demand[:, :-1] + demand[:, 1:]) / 2
    h_demand = (demand[:-1, :] + demand[1:, :]) / 2

    for k in range(layers.num_metal_layers):
        scale = 0.5 if k == 0 else 1.0
        # even layers route horizontally: their wires cross vertical borders
        v_cap = int(base * scale) if k % 2 == 0 else 0
        h_cap = int(base * scale) if k % 2 == 1 else 0
        capacity = np.where(v_open, v_cap, 0)
        congestion.vertical[k, :, :, 0] = capacity
        congestion.vertical[k, :, :, 1] = rng.poisson(DEMAND_RATIO * capacity * v_demand)
        capacity = np.where(h_open, h_cap, 0)
        congestion.horizontal[k, :, :, 0] = capacity
        congestion.horizontal[k, :, :, 1] = rng.poisson(DEMAND_RATIO * capacity * h_demand)

    for k in range(layers.num_via_layers):
        capacity = np.where(open_cells, 2 * base, 0)
        congestion.via[k, :, :, 0] = capacity
        congestion.via[k, :, :, 1] = rng.poisson(VIA_DEMAND_RATIO * capacity * demand)
    return congestion


def overflow_per_gcell(congestion: CongestionMap) -> np.ndarray:
    """Sum of max(L - C, 0) over every border and via resource of each g-cell, shape (ny, nx)."""
    v_over = np.maximum(congestion.vertical[..., 1] - congestion.vertical[..., 0], 0).sum(axis=0)
    h_over = np.maximum(congestion.horizontal[..., 1] - congestion.horizontal[..., 0], 0).sum(axis=0)
    via_over = np.maximum(congestion.via[..., 1] - congestion.via[..., 0], 0).sum(axis=0)

    total = via_over.astype(np.float64)
    total[:, :-1] += v_over
    total[:, 1:] += v_over
    total[:-1, :] += h_over
    total[1:, :] += h_over
    return total


def _plant_hotspots(cfg: SynthConfig, score: np.ndarray, covered: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Top-quantile g-cells by score, then symmetric label noise that keeps the count."""
    open_flat = np.flatnonzero(~covered.reshape(-1))
    k = max(1, int(round(cfg.target_hotspot_rate * len(open_flat))))
    ranked = open_flat[np.argsort(-score.reshape(-1)[open_flat], kind="stable")]
    positives = ranked[:k]
    negatives = ranked[k:]

    flips = min(int(round(cfg.label_noise * k)), len(negatives))
    if flips:
        dropped = rng.choice(len(positives), size=flips, replace=False)
        added = rng.choice(len(negatives), size=flips, replace=False)
        positives = np.concatenate([np.delete(positives, dropped), negatives[added]])

    planted = np.zeros(covered.size, dtype=bool)
    planted[positives] = True
    return planted.reshape(covered.shape)


def _drc_boxes(cfg: SynthConfig, planted: np.ndarray, rng: np.random.Generator) -> list[Rect]:
    """One box strictly inside each planted g-cell."""
    gw, gh = cfg.gcell_width, cfg.gcell_height
    boxes = []
    for r, c in zip(*np.nonzero(planted)):
        w, h = gw * rng.uniform(0.05, 0.4), gh * rng.uniform(0.05, 0.4)
        x = c * gw + rng.uniform(0.01 * gw, gw - w - 0.01 * gw)
        y = r * gh + rng.uniform(0.01 * gh, gh - h - 0.01 * gh)
        boxes.append(Rect(float(x), float(y), float(w), float(h)))
    return boxes


def generate_design(cfg: SynthConfig, name: str = "synth") -> SyntheticDesign:
    """Generate one design and keep its planted hotspot set alongside."""
    rng = derive_rng(cfg.seed, "layout")
    layers = LayerConfig(cfg.layer_config.metal, cfg.layer_config.via)

    blockages, covered = _place_macros(cfg, rng)
    if covered.all():
        raise GenerationError(f"{name}: every g-cell is covered by macros, nothing left to sample")
    density = _density_field(cfg.nx, cfg.ny, rng)
    cells, pin_specs = _place_cells(cfg, density, covered, rng)
    pins, nets = _wire_nets(cfg, pin_specs, rng)

    pin_counts = np.zeros((cfg.ny, cfg.nx))
    for pin in pins:
        c = min(int(np.floor(pin.x / cfg.gcell_width)), cfg.nx - 1)
        r = min(int(np.floor(pin.y / cfg.gcell_height)), cfg.ny - 1)
        pin_counts[r, c] += 1

    congestion = _route(cfg, layers, pin_counts, covered, rng)
    score = ALPHA * overflow_per_gcell(congestion) + BETA * pin_counts + SCORE_NOISE * rng.normal(size=pin_counts.shape)
    planted = _plant_hotspots(cfg, score, covered, rng)

    grid = LayoutGrid(
        nx=cfg.nx,
        ny=cfg.ny,
        gcell_width=float(cfg.gcell_width),
        gcell_height=float(cfg.gcell_height),
        layer_config=layers,
        congestion=congestion,
        cells=tuple(cells),
        pins=tuple(pins),
        nets=tuple(nets),
        blockages=tuple(blockages),
    )
    drc = DrcReport(tuple(_drc_boxes(cfg, planted, rng)))
    hotspots = frozenset((int(c), int(r)) for r, c in zip(*np.nonzero(planted)))
    logger.info(
        "%s: %dx%d grid, %d cells, %d pins, %d nets, %d hotspots (%.2f%% of %d open g-cells)",
        name, cfg.nx, cfg.ny, len(cells), len(pins), len(nets), len(hotspots),
        100.0 * len(hotspots) / max(1, int((~covered).sum())), int((~covered).sum()),
    )
    return SyntheticDesign(name, cfg, grid, drc, hotspots)


def generate(cfg: SynthConfig) -> tuple[LayoutGrid, DrcReport]:
    """
    Generate a synthetic layout and its DRC report.

    Args:
        cfg: Generation parameters; the output is a pure function of cfg

    Returns:
        (grid, drc) pair
    """
    design = generate_design(cfg)
    return design.grid, design.drc


def _jitter(base: SynthConfig, rng: np.random.Generator) -> dict:
    return {
        "nx": max(3, int(round(base.nx * rng.uniform(0.75, 1.25)))),
        "ny": max(3, int(round(base.ny * rng.uniform(0.75, 1.25)))),
        "cells_per_gcell_mean": base.cells_per_gcell_mean * rng.uniform(0.8, 1.2),
        "pins_per_cell_mean": base.pins_per_cell_mean * rng.uniform(0.8, 1.2),
        "blockage_fraction": min(0.5, base.blockage_fraction * rng.uniform(0.5, 1.5)),
        "target_hotspot_rate": min(0.99, base.target_hotspot_rate * rng.uniform(0.75, 1.25)),
    }


def generate_suite_designs(base: SynthConfig, n_designs: int, seed: int) -> list[SyntheticDesign]:
    """Designs synth_00..; design 0 keeps the base densities, later ones are jittered."""
    if n_designs < 1:
        raise GenerationError(f"n_designs must be at least 1, got {n_designs}")
    designs = []
    for i in range(n_designs):
        update = {"seed": derive_seed(seed, i)}
        if i > 0:
            update.update(_jitter(base, derive_rng(seed, "jitter", i)))
        cfg = SynthConfig.model_validate({**base.model_dump(), **update})
        designs.append(generate_design(cfg, name=suite_name(i, n_designs)))
    return designs


def suite_name(index: int, n_designs: int) -> str:
    return f"synth_{index:0{max(2, len(str(n_designs - 1)))}d}"


def generate_suite(base: SynthConfig, n_designs: int, seed: int) -> list[tuple[str, LayoutGrid, DrcReport]]:
    """Named (grid, drc) pairs of a seeded multi-design suite."""
    return [(d.name, d.grid, d.drc) for d in generate_suite_designs(base, n_designs, seed)]
