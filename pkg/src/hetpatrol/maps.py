"""Bundled synthetic worlds and user-map loading.

Each world is three text files sharing a stem: ``<stem>.map`` (occupancy),
``<stem>.graph`` (patrol nodes and edges) and ``<stem>.sources`` (one
``source <x_m> <y_m>`` line per emitter location).
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .engine import World
from .worldmap import GridMap, MapFormatError, Position, load_graph, load_map

BUNDLED = ("open", "cumberland", "office")
DESK_MAP = "cumberland"


def parse_sources(text: str) -> list[Position]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] != "source":
            raise MapFormatError(f"line {lineno}: expected 'source <x> <y>'")
        out.append(Position(float(parts[1]), float(parts[2])))
    return out


def load_world(name: str, map_dir: Optional[Union[str, Path]] = None) -> tuple[World, list[Position]]:
    """Load ``name`` from ``map_dir`` or, when None, from the bundled data."""
    if map_dir is None:
        if name not in BUNDLED:
            raise KeyError(f"unknown bundled map {name!r}; choose from {BUNDLED}")
        base = resources.files("hetpatrol") / "data"
        read = lambda ext: (base / f"{name}{ext}").read_text()  # noqa: E731
    else:
        base = Path(map_dir)
        read = lambda ext: (base / f"{name}{ext}").read_text()  # noqa: E731
    grid = load_map(read(".map"))
    graph = load_graph(read(".graph"), grid)
    sources = parse_sources(read(".sources"))
    for s in sources:
        if not grid.is_free_at(s):
            raise MapFormatError(f"source {tuple(s)} is not on a free cell")
    return World(grid, graph, name), sources


# --- generators used to produce the bundled files -------------------------

def _blank(width: int, height: int) -> np.ndarray:
    occ = np.zeros((height, width), dtype=bool)
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    return occ


def _hwall(occ, row, c0, c1, doors=()):
    occ[row, c0:c1 + 1] = True
    for d0, d1 in doors:
        occ[row, d0:d1 + 1] = False


def _vwall(occ, col, r0, r1, doors=()):
    occ[r0:r1 + 1, col] = True
    for d0, d1 in doors:
        occ[d0:d1 + 1, col] = False


def _graph_text(grid: GridMap, nodes: dict[int, tuple[int, int]], edges) -> str:
    lines = []
    for nid, (r, c) in sorted(nodes.items()):
        p = grid.center_of(r, c)
        lines.append(f"node {nid} {p.x:.4f} {p.y:.4f}")
    for a, b in edges:
        lines.append(f"edge {a} {b}")
    return "\n".join(lines) + "\n"


def _sources_text(grid: GridMap, cells) -> str:
    return "".join(f"source {grid.center_of(r, c).x:.4f} {grid.center_of(r, c).y:.4f}\n" for r, c in cells)


def make_open():
    """8 m x 8 m empty room with a ring route."""
    occ = _blank(40, 40)
    grid = GridMap(40, 40, 0.2, occ)
    nodes = {0: (8, 8), 1: (8, 20), 2: (8, 31), 3: (20, 31), 4: (31, 31), 5: (31, 20), 6: (31, 8), 7: (20, 8)}
    edges = [(i, (i + 1) % 8) for i in range(8)]
    sources = [(20, 20), (14, 25), (25, 14)]
    return grid, _graph_text(grid, nodes, edges), _sources_text(grid, sources)


def make_cumberland():
    """30 m x 18 m: two corridors, a hall and rooms; the desk-scale world."""
    occ = _blank(150, 90)
    # top rooms
    _hwall(occ, 28, 0, 149, doors=[(13, 17), (43, 47), (73, 77), (103, 107), (133, 137)])
    for col in (30, 60, 90, 120):
        _vwall(occ, col, 0, 28)
    # middle band: hall on the left, two offices on the right
    _hwall(occ, 37, 0, 139, doors=[(25, 29), (80, 84), (120, 124)])
    _hwall(occ, 57, 0, 139, doors=[(35, 39), (95, 99)])
    _vwall(occ, 60, 37, 57)
    _vwall(occ, 100, 37, 57)
    _vwall(occ, 139, 37, 57)
    # partial partition inside the hall
    _hwall(occ, 47, 20, 45)
    # bottom rooms
    _hwall(occ, 66, 0, 149, doors=[(23, 27), (73, 77), (123, 127)])
    _vwall(occ, 50, 66, 89)
    _vwall(occ, 100, 66, 89)
    _vwall(occ, 115, 66, 89, doors=[(80, 84)])
    grid = GridMap(150, 90, 0.2, occ)
    nodes = {
        # upper corridor (rows 29-36)
        0: (32, 5), 1: (32, 27), 2: (32, 60), 3: (32, 82), 4: (32, 105), 5: (32, 135), 6: (32, 144),
        # top rooms
        7: (14, 15), 8: (14, 45), 9: (14, 75), 10: (14, 105), 11: (14, 135),
        # middle band
        12: (42, 30), 13: (52, 40), 14: (47, 82), 15: (47, 122), 16: (47, 144),
        # lower corridor (rows 58-65)
        17: (61, 5), 18: (61, 25), 19: (61, 37), 20: (61, 75), 21: (61, 97), 22: (61, 125), 23: (61, 144),
        # bottom rooms
        24: (78, 25), 25: (78, 75), 26: (78, 125),
    }
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6),
             (1, 7), (2, 8), (3, 9), (4, 10), (5, 11),
             (1, 12), (12, 13), (13, 19), (3, 14), (14, 21), (5, 15), (15, 22), (6, 16), (16, 23),
             (17, 18), (18, 19), (19, 20), (20, 21), (21, 22), (22, 23),
             (18, 24), (20, 25), (22, 26)]
    sources = [(53, 10), (4, 87), (86, 140)]
    return grid, _graph_text(grid, nodes, edges), _sources_text(grid, sources)


def make_office():
    """36 m x 24 m: a ring corridor around a central block of offices."""
    occ = _blank(180, 120)
    # outer offices above and below the ring
    _hwall(occ, 27, 0, 179, doors=[(20, 24), (65, 69), (110, 114), (155, 159)])
    _hwall(occ, 93, 0, 179, doors=[(20, 24), (65, 69), (110, 114), (155, 159)])
    for col in (45, 90, 135):
        _vwall(occ, col, 0, 27)
        _vwall(occ, col, 93, 119)
    # central block with two offices, each entered from its end of the ring
    _hwall(occ, 40, 28, 151)
    _hwall(occ, 80, 28, 151)
    _vwall(occ, 28, 40, 80, doors=[(57, 62)])
    _vwall(occ, 151, 40, 80, doors=[(57, 62)])
    _vwall(occ, 90, 40, 80)
    # cubicle partitions in the left office
    _hwall(occ, 60, 50, 75)
    grid = GridMap(180, 120, 0.2, occ)
    nodes = {
        # ring corridor
        0: (33, 14), 1: (33, 67), 2: (33, 112), 3: (33, 165),
        4: (87, 14), 5: (87, 67), 6: (87, 112), 7: (87, 165),
        8: (60, 14), 9: (60, 165),
        # outer offices
        10: (13, 22), 11: (13, 67), 12: (13, 112), 13: (13, 157),
        14: (106, 22), 15: (106, 67), 16: (106, 112), 17: (106, 157),
        # central offices
        18: (60, 40), 19: (50, 80), 20: (60, 140), 21: (70, 100),
    }
    edges = [(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7), (0, 8), (8, 4), (3, 9), (9, 7),
             (0, 10), (1, 11), (2, 12), (3, 13), (4, 14), (5, 15), (6, 16), (7, 17),
             (8, 18), (18, 19), (9, 20), (20, 21)]
    sources = [(72, 60), (4, 174), (114, 80)]
    return grid, _graph_text(grid, nodes, edges), _sources_text(grid, sources)


GENERATORS = {"open": make_open, "cumberland": make_cumberland, "office": make_office}


def write_bundled(out_dir: Union[str, Path]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, gen in GENERATORS.items():
        grid, graph_text, sources_text = gen()
        (out / f"{name}.map").write_text(grid.to_text())
        (out / f"{name}.graph").write_text(graph_text)
        (out / f"{name}.sources").write_text(sources_text)
