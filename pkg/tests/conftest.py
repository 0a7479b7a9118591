import math

import networkx as nx
import numpy as np
import pytest

from hetpatrol.maps import load_world
from hetpatrol.signalmodel import SignalParams, load_or_build
from hetpatrol.worldmap import GridMap, load_map


def grid_from(rows, mpc=1.0) -> GridMap:
    text = f"mpc {mpc}\n{len(rows[0])} {len(rows)}\n" + "\n".join(rows) + "\n"
    return load_map(text)


def random_grid(rng, max_side=20, density=0.3, mpc=1.0) -> GridMap:
    h = int(rng.integers(2, max_side + 1))
    w = int(rng.integers(2, max_side + 1))
    occ = rng.random((h, w)) < density
    if occ.all():
        occ[0, 0] = False
    return GridMap(w, h, mpc, occ)


def dijkstra_oracle(grid: GridMap, a, b):
    """Independent shortest-path cost: networkx over the 8-connected cell graph without corner cutting."""
    g = nx.Graph()
    for r, c in grid.free_cells():
        g.add_node((r, c))
        for dr, dc in ((0, 1), (1, 0), (1, 1), (1, -1)):
            rr, cc = r + dr, c + dc
            if not grid.is_free(rr, cc):
                continue
            if dr and dc and not (grid.is_free(r + dr, c) and grid.is_free(r, c + dc)):
                continue
            g.add_edge((r, c), (rr, cc), weight=math.sqrt(2) if dr and dc else 1.0)
    try:
        return nx.dijkstra_path_length(g, a, b)
    except nx.NetworkXNoPath:
        return None


@pytest.fixture(scope="session")
def open_world():
    world, sources = load_world("open")
    return world, sources


@pytest.fixture(scope="session")
def open_signal(open_world):
    world, sources = open_world
    return [load_or_build(world.grid, s, SignalParams()) for s in sources]


@pytest.fixture(scope="session")
def desk_world():
    return load_world("cumberland")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
