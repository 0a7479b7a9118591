"""Multi-wall indoor path loss and precomputed RSSI rasters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Optional

import numpy as np

from .worldmap import GridMap, Position, walls_between_cells

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class SignalParams:
    """Emitter and receiver constants.

    Attributes:
        tx_power: transmit power in dBm.
        frequency: carrier frequency in Hz.
        wall_attenuation: loss per crossed wall in dB.
        found_threshold: RSSI at or above which the source counts as found.
        detection_floor: RSSI below which nothing is perceived.
    """

    tx_power: float = 20.0
    frequency: float = 2.4e9
    wall_attenuation: float = 4.0
    found_threshold: float = -20.0
    detection_floor: float = -90.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")
        if self.wall_attenuation < 0:
            raise ValueError("wall_attenuation must be non-negative")
        if not self.detection_floor < self.found_threshold:
            raise ValueError("detection_floor must be below found_threshold")


def path_loss(distance: float, walls: int, params: SignalParams) -> float:
    """Free-space loss at ``distance`` metres plus ``walls`` wall penalties, in dB."""
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance}")
    if walls < 0:
        raise ValueError("walls must be non-negative")
    return (20.0 * math.log10(distance)
            + 20.0 * math.log10(params.frequency)
            + 20.0 * math.log10(4.0 * math.pi / SPEED_OF_LIGHT)
            + walls * params.wall_attenuation)


def rssi_at(params: SignalParams, loss: float) -> float:
    return params.tx_power - loss


@dataclass(frozen=True, eq=False)
class SignalMap:
    """RSSI raster for one emitter; ``rssi`` is NaN on occupied cells."""

    grid: GridMap
    source: Position
    params: SignalParams
    rssi: np.ndarray
    _flat: list = field(init=False, repr=False)

    def __post_init__(self):
        arr = np.array(self.rssi, dtype=float)
        if arr.shape != (self.grid.height, self.grid.width):
            raise ValueError("rssi raster does not match the grid")
        if np.isnan(arr[~self.grid.occupied]).any():
            raise ValueError("rssi undefined on a free cell")
        arr[self.grid.occupied] = np.nan
        arr.flags.writeable = False
        object.__setattr__(self, "rssi", arr)
        object.__setattr__(self, "_flat", arr.ravel().tolist())

    @property
    def max_rssi(self) -> float:
        return float(np.nanmax(self.rssi))

    def value_at_cell(self, row: int, col: int) -> float:
        return self._flat[row * self.grid.width + col]

    def to_text(self) -> str:
        p = self.params
        lines = [
            f"source {self.source[0]:.4f} {self.source[1]:.4f}",
            f"params {p.tx_power:.4f} {p.frequency:.4f} {p.wall_attenuation:.4f} "
            f"{p.found_threshold:.4f} {p.detection_floor:.4f}",
        ]
        for row in self.rssi:
            lines.append(" ".join("X" if math.isnan(v) else f"{v:.4f}" for v in row))
        return "\n".join(lines) + "\n"


def build_signal_map(grid: GridMap, source: Position, params: SignalParams) -> SignalMap:
    """Evaluate the multi-wall model at every free cell centre.

    Distances are clamped below at half a cell and the source's own cell
    uses exactly that clamp, so it holds the finite maximum.
    """
    sr, sc = grid.cell_of(source)
    if not grid.is_free(sr, sc):
        raise ValueError(f"source {tuple(source)} lies on an occupied cell")
    d_min = grid.meters_per_cell / 2.0
    out = np.full((grid.height, grid.width), np.nan)
    for r, c in grid.free_cells():
        center = grid.center_of(r, c)
        d = d_min if (r, c) == (sr, sc) else max(math.dist(center, source), d_min)
        walls = walls_between_cells(grid, r, c, sr, sc)
        out[r, c] = rssi_at(params, path_loss(d, walls, params))
    return SignalMap(grid, Position(*source), params, out)


def sample_rssi(sm: SignalMap, at: Position) -> Optional[float]:
    """RSSI of the cell containing ``at``; None when below the detection floor."""
    r, c = sm.grid.cell_of(at)
    if not sm.grid.is_free(r, c):
        raise ValueError(f"position {tuple(at)} is on an occupied cell")
    v = sm._flat[r * sm.grid.width + c]
    if v < sm.params.detection_floor:
        return None
    return v


def parse_signal_map(text: str, grid: GridMap) -> SignalMap:
    """Read a cache file written by :meth:`SignalMap.to_text`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != grid.height + 2:
        raise ValueError(f"expected {grid.height + 2} lines, found {len(lines)}")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "source":
        raise ValueError("malformed source line")
    par = lines[1].split()
    if len(par) != 6 or par[0] != "params":
        raise ValueError("malformed params line")
    params = SignalParams(*(float(v) for v in par[1:]))
    rssi = np.full((grid.height, grid.width), np.nan)
    for i, line in enumerate(lines[2:]):
        vals = line.split()
        if len(vals) != grid.width:
            raise ValueError(f"row {i} has {len(vals)} values, expected {grid.width}")
        for j, v in enumerate(vals):
            if v == "X":
                if not grid.occupied[i, j]:
                    raise ValueError(f"free cell ({i}, {j}) marked X")
            else:
                if grid.occupied[i, j]:
                    raise ValueError(f"occupied cell ({i}, {j}) has a value")
                rssi[i, j] = float(v)
    return SignalMap(grid, Position(float(head[1]), float(head[2])), params, rssi)


def load_or_build(grid: GridMap, source: Position, params: SignalParams,
                  cache_file: Optional[FsPath] = None) -> SignalMap:
    """Return the signal map, reading ``cache_file`` when it exists and writing it otherwise.

    Values come back rounded to the cache's 4 decimals either way, so a trial
    sees the same raster whether or not it was cached.
    """
    if cache_file is not None and FsPath(cache_file).exists():
        sm = parse_signal_map(FsPath(cache_file).read_text(), grid)
        if sm.params == params and sm.source == Position(round(source[0], 4), round(source[1], 4)):
            return sm
    text = build_signal_map(grid, source, params).to_text()
    if cache_file is not None:
        FsPath(cache_file).parent.mkdir(parents=True, exist_ok=True)
        FsPath(cache_file).write_text(text)
    return parse_signal_map(text, grid)
