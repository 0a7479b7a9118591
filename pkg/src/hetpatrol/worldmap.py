"""Occupancy grid world, patrol graph, line-of-sight wall counting and A*.

Coordinates are continuous metres with the origin at the top-left corner of
the grid; cell ``(row, col)`` spans ``[col*mpc, (col+1)*mpc)`` in x and
``[row*mpc, (row+1)*mpc)`` in y.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

SQRT2 = math.sqrt(2.0)


class MapFormatError(ValueError):
    """Raised when a map or graph file does not parse."""


class NoRouteError(RuntimeError):
    """Raised when A* cannot connect two free cells."""


class Position(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True, eq=False)
class GridMap:
    """Immutable occupancy grid.

    Attributes:
        width: number of columns.
        height: number of rows.
        meters_per_cell: cell edge length in metres.
        occupied: ``(height, width)`` boolean array, True for walls.
    """

    width: int
    height: int
    meters_per_cell: float
    occupied: np.ndarray
    _free: bytearray = field(init=False, repr=False)

    def __post_init__(self):
        occ = np.asarray(self.occupied, dtype=bool)
        if self.width < 1 or self.height < 1:
            raise ValueError("map must be at least 1x1")
        if not self.meters_per_cell > 0:
            raise ValueError("meters_per_cell must be positive")
        if occ.shape != (self.height, self.width):
            raise ValueError(f"occupancy shape {occ.shape} != ({self.height}, {self.width})")
        if occ.all():
            raise ValueError("map has no free cells")
        occ = occ.copy()
        occ.flags.writeable = False
        object.__setattr__(self, "occupied", occ)
        # flat row-major free flags, fast to index from pure Python loops
        object.__setattr__(self, "_free", bytearray((~occ).ravel().tobytes()))

    @property
    def n_free(self) -> int:
        return int((~self.occupied).sum())

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.height and 0 <= col < self.width

    def is_free(self, row: int, col: int) -> bool:
        return 0 <= row < self.height and 0 <= col < self.width and bool(self._free[row * self.width + col])

    def contains(self, p: Position) -> bool:
        return 0.0 <= p[0] < self.width * self.meters_per_cell and 0.0 <= p[1] < self.height * self.meters_per_cell

    def cell_of(self, p: Position) -> tuple[int, int]:
        """Return ``(row, col)`` of the cell containing ``p``."""
        if not self.contains(p):
            raise ValueError(f"position {tuple(p)} outside the map")
        mpc = self.meters_per_cell
        return min(int(p[1] // mpc), self.height - 1), min(int(p[0] // mpc), self.width - 1)

    def center_of(self, row: int, col: int) -> Position:
        mpc = self.meters_per_cell
        return Position((col + 0.5) * mpc, (row + 0.5) * mpc)

    def is_free_at(self, p: Position) -> bool:
        return self.contains(p) and self.is_free(*self.cell_of(p))

    def free_cells(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(~self.occupied)
        return list(zip(rows.tolist(), cols.tolist()))

    def to_text(self) -> str:
        lines = [f"mpc {self.meters_per_cell!r}", f"{self.width} {self.height}"]
        for row in self.occupied:
            lines.append("".join("#" if c else "." for c in row))
        return "\n".join(lines) + "\n"


def load_map(text: str) -> GridMap:
    """Parse map-file text.

    Format: ``mpc <float>``, then ``<width> <height>``, then ``height`` rows of
    ``width`` characters where ``.`` is free and ``#`` is occupied.
    """
    lines = [ln.rstrip("\r") for ln in text.splitlines()]
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) < 2:
        raise MapFormatError("missing header")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "mpc":
        raise MapFormatError(f"malformed header line 1: {lines[0]!r}")
    try:
        mpc = float(head[1])
        width, height = (int(v) for v in lines[1].split())
    except ValueError as exc:
        raise MapFormatError(f"malformed header: {exc}") from None
    if not mpc > 0 or width < 1 or height < 1:
        raise MapFormatError("header values must be positive")
    rows = lines[2:]
    if len(rows) != height:
        raise MapFormatError(f"expected {height} rows, found {len(rows)}")
    occ = np.zeros((height, width), dtype=bool)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise MapFormatError(f"ragged row {i}: length {len(row)}, expected {width}")
        for j, ch in enumerate(row):
            if ch == "#":
                occ[i, j] = True
            elif ch != ".":
                raise MapFormatError(f"unknown character {ch!r} at row {i}, col {j}")
    if occ.all():
        raise MapFormatError("map has zero free cells")
    return GridMap(width, height, mpc, occ)


def supercover_cells(r0: int, c0: int, r1: int, c1: int) -> list[tuple[int, int]]:
    """All cells touched by the segment joining two cell centres, endpoints included.

    Exact integer arithmetic; when the segment passes through a cell corner
    both side cells are included, so the returned set does not depend on the
    direction of travel.
    """
    dc, dr = c1 - c0, r1 - r0
    nc, nr = abs(dc), abs(dr)
    sc = 1 if dc > 0 else -1
    sr = 1 if dr > 0 else -1
    r, c = r0, c0
    cells = [(r, c)]
    ic = ir = 0
    while ic < nc or ir < nr:
        # compare crossing parameters of the next vertical and horizontal grid lines
        lhs = (1 + 2 * ic) * nr
        rhs = (1 + 2 * ir) * nc
        if lhs == rhs:
            cells.append((r, c + sc))
            cells.append((r + sr, c))
            r += sr
            c += sc
            ic += 1
            ir += 1
        elif lhs < rhs:
            c += sc
            ic += 1
        else:
            r += sr
            ir += 1
        cells.append((r, c))
    return cells


def walls_crossed(grid: GridMap, a: Position, b: Position) -> int:
    """Count occupied cells on the line between the cells of ``a`` and ``b``.

    The endpoints' own cells are not counted.
    """
    ra, ca = grid.cell_of(a)
    rb, cb = grid.cell_of(b)
    return walls_between_cells(grid, ra, ca, rb, cb)


def walls_between_cells(grid: GridMap, ra: int, ca: int, rb: int, cb: int) -> int:
    if (ra, ca) == (rb, cb):
        return 0
    free = grid._free
    w = grid.width
    n = 0
    for r, c in supercover_cells(ra, ca, rb, cb):
        if (r, c) == (ra, ca) or (r, c) == (rb, cb):
            continue
        if not free[r * w + c]:
            n += 1
    return n


@dataclass(frozen=True)
class Path:
    waypoints: tuple[Position, ...]
    total_length: float

    @classmethod
    def from_waypoints(cls, waypoints) -> "Path":
        pts = tuple(Position(*p) for p in waypoints)
        length = sum(math.dist(p, q) for p, q in zip(pts, pts[1:]))
        return cls(pts, length)


_MOVES = [(-1, 0, 1.0), (1, 0, 1.0), (0, -1, 1.0), (0, 1, 1.0),
          (-1, -1, SQRT2), (-1, 1, SQRT2), (1, -1, SQRT2), (1, 1, SQRT2)]


def _neighbor_table(grid: GridMap) -> list:
    """Per flat cell index, the legal ``(next_index, step_cost)`` moves."""
    table = grid.__dict__.get("_nbrs")
    if table is not None:
        return table
    w, h = grid.width, grid.height
    free = grid._free
    table = [()] * (w * h)
    for idx in range(w * h):
        if not free[idx]:
            continue
        r, c = divmod(idx, w)
        moves = []
        for dr, dc, step in _MOVES:
            nr, nc = r + dr, c + dc
            if nr < 0 or nr >= h or nc < 0 or nc >= w or not free[nr * w + nc]:
                continue
            if dr and dc and not (free[r * w + nc] and free[nr * w + c]):
                continue
            moves.append((nr * w + nc, step))
        table[idx] = tuple(moves)
    object.__setattr__(grid, "_nbrs", table)
    object.__setattr__(grid, "_route_cache", {})
    return table


def astar_cells(grid: GridMap, start: tuple[int, int], goal: tuple[int, int]) -> tuple[list[tuple[int, int]], float]:
    """8-connected A* between free cells, cost in cell units.

    Diagonal moves require both adjacent axial cells to be free. Results are
    memoised per grid.
    """
    w = grid.width
    free = grid._free
    s = start[0] * w + start[1]
    g = goal[0] * w + goal[1]
    if not free[s] or not free[g]:
        raise NoRouteError("start or goal cell is occupied")
    if s == g:
        return [start], 0.0
    nbrs = _neighbor_table(grid)
    cache = grid.__dict__["_route_cache"]
    hit = cache.get((s, g))
    if hit is not None:
        return list(hit[0]), hit[1]
    gr, gc = goal
    k = SQRT2 - 2.0

    best = {s: 0.0}
    parent = {s: -1}
    closed = set()
    dr0, dc0 = abs(start[0] - gr), abs(start[1] - gc)
    h0 = dr0 + dc0 + k * (dr0 if dr0 < dc0 else dc0)
    heap = [(h0, h0, s)]
    pop, push = heapq.heappop, heapq.heappush
    while heap:
        _, hcur, cur = pop(heap)
        if cur in closed:
            continue
        if cur == g:
            break
        closed.add(cur)
        cost = best[cur]
        for nxt, step in nbrs[cur]:
            ncost = cost + step
            if ncost < best.get(nxt, math.inf) - 1e-12:
                best[nxt] = ncost
                parent[nxt] = cur
                r, c = divmod(nxt, w)
                dr = r - gr if r > gr else gr - r
                dc = c - gc if c > gc else gc - c
                hn = dr + dc + k * (dr if dr < dc else dc)
                # ties on f go to the node nearer the goal
                push(heap, (ncost + hn, hn, nxt))
    else:
        raise NoRouteError(f"no route from {start} to {goal}")
    cells = []
    cur = g
    while cur != -1:
        cells.append(divmod(cur, w))
        cur = parent[cur]
    cells.reverse()
    if len(cache) > 200_000:
        cache.clear()
    cache[(s, g)] = (tuple(cells), best[g])
    return cells, best[g]


def astar(grid: GridMap, start: Position, goal: Position) -> Path:
    """Shortest 8-connected path between the cells of two positions.

    Waypoints are cell centres from the start cell to the goal cell; the
    path is empty when both positions share a cell.
    """
    a = grid.cell_of(start)
    b = grid.cell_of(goal)
    if not grid.is_free(*a) or not grid.is_free(*b):
        raise NoRouteError("start or goal cell is occupied")
    if a == b:
        return Path((), 0.0)
    cells, cost = astar_cells(grid, a, b)
    pts = tuple(grid.center_of(r, c) for r, c in cells)
    return Path(pts, cost * grid.meters_per_cell)


def project_goal(grid: GridMap, current: Position, proposed: Position,
                 repulsion_caused: bool) -> Optional[Position]:
    """Move a proposed goal out of obstacles, or return None to stay still.

    A free proposal is returned unchanged. An occupied proposal caused by
    agent repulsion gives None. Otherwise the ray from ``current`` through
    ``proposed`` is marched beyond the occupied run and the centre of the
    first free cell is returned; None if the ray leaves the map first.
    Proposals outside the map are first pulled back along the ray onto the
    map boundary.
    """
    proposed = _clip_to_map(grid, current, proposed)
    if grid.is_free(*grid.cell_of(proposed)):
        return proposed
    if repulsion_caused:
        return None
    dx = proposed[0] - current[0]
    dy = proposed[1] - current[1]
    if dx == 0.0 and dy == 0.0:
        return None
    for r, c in _ray_cells(grid, proposed, dx, dy):
        if grid._free[r * grid.width + c]:
            return grid.center_of(r, c)
    return None


def _clip_to_map(grid: GridMap, current: Position, proposed: Position) -> Position:
    if grid.contains(proposed):
        return Position(*proposed)
    W = grid.width * grid.meters_per_cell
    H = grid.height * grid.meters_per_cell
    eps = 1e-9 * max(W, H)
    dx = proposed[0] - current[0]
    dy = proposed[1] - current[1]
    t = 1.0
    if dx > 0:
        t = min(t, (W - eps - current[0]) / dx)
    elif dx < 0:
        t = min(t, (0.0 - current[0]) / dx)
    if dy > 0:
        t = min(t, (H - eps - current[1]) / dy)
    elif dy < 0:
        t = min(t, (0.0 - current[1]) / dy)
    t = max(t, 0.0)
    x = min(max(current[0] + t * dx, 0.0), W - eps)
    y = min(max(current[1] + t * dy, 0.0), H - eps)
    return Position(x, y)


def _ray_cells(grid: GridMap, origin: Position, dx: float, dy: float):
    """Yield cells along a ray (Amanatides-Woo traversal) until it leaves the map."""
    mpc = grid.meters_per_cell
    x, y = origin[0] / mpc, origin[1] / mpc
    r, c = grid.cell_of(origin)
    step_c = 1 if dx > 0 else -1
    step_r = 1 if dy > 0 else -1
    t_dc = abs(1.0 / dx) if dx else math.inf
    t_dr = abs(1.0 / dy) if dy else math.inf
    if dx > 0:
        t_c = (c + 1 - x) * t_dc
    elif dx < 0:
        t_c = (x - c) * t_dc
    else:
        t_c = math.inf
    if dy > 0:
        t_r = (r + 1 - y) * t_dr
    elif dy < 0:
        t_r = (y - r) * t_dr
    else:
        t_r = math.inf
    while True:
        if t_c < t_r:
            c += step_c
            t_c += t_dc
        elif t_r < t_c:
            r += step_r
            t_r += t_dr
        else:
            c += step_c
            r += step_r
            t_c += t_dc
            t_r += t_dr
        if not grid.in_bounds(r, c):
            return
        yield r, c


@dataclass(frozen=True, eq=False)
class PatrolGraph:
    """Undirected patrol route over a grid.

    Attributes:
        nodes: node id -> position.
        edges: ``{(a, b): length}`` with ``a < b``.
    """

    nodes: dict[int, Position]
    edges: dict[tuple[int, int], float]
    adjacency: dict[int, tuple[int, ...]] = field(init=False, repr=False)

    def __post_init__(self):
        adj: dict[int, list[int]] = {n: [] for n in self.nodes}
        for (a, b), length in self.edges.items():
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge ({a}, {b}) references an unknown node")
            if a == b:
                raise ValueError(f"self loop at node {a}")
            if length < math.dist(self.nodes[a], self.nodes[b]) - 1e-9:
                raise ValueError(f"edge ({a}, {b}) shorter than the straight line")
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "adjacency", {n: tuple(sorted(v)) for n, v in adj.items()})
        if self.nodes and not self._connected():
            raise ValueError("patrol graph is not connected")

    def _connected(self) -> bool:
        start = next(iter(self.nodes))
        seen = {start}
        stack = [start]
        while stack:
            for m in self.adjacency[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        return len(seen) == len(self.nodes)

    @property
    def node_ids(self) -> list[int]:
        return sorted(self.nodes)

    def neighbors(self, node: int) -> tuple[int, ...]:
        return self.adjacency[node]

    def edge_length(self, a: int, b: int) -> float:
        return self.edges[(a, b) if a < b else (b, a)]


def load_graph(text: str, grid: GridMap) -> PatrolGraph:
    """Parse a graph file; edge lengths are A* path lengths over ``grid``.

    Lines are ``node <id> <x_m> <y_m>`` or ``edge <id_a> <id_b>``; blank lines
    and ``#`` comments are skipped.
    """
    nodes: dict[int, Position] = {}
    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "node" and len(parts) == 4:
                nid = int(parts[1])
                if nid in nodes:
                    raise MapFormatError(f"line {lineno}: duplicate node id {nid}")
                nodes[nid] = Position(float(parts[2]), float(parts[3]))
            elif parts[0] == "edge" and len(parts) == 3:
                a, b = int(parts[1]), int(parts[2])
                pairs.append((min(a, b), max(a, b)))
            else:
                raise MapFormatError(f"line {lineno}: cannot parse {raw!r}")
        except ValueError as exc:
            if isinstance(exc, MapFormatError):
                raise
            raise MapFormatError(f"line {lineno}: {exc}") from None
    for nid, p in nodes.items():
        if not grid.is_free_at(p):
            raise MapFormatError(f"node {nid} at {tuple(p)} is not on a free cell")
    edges = {}
    for a, b in pairs:
        if a not in nodes or b not in nodes:
            raise MapFormatError(f"edge ({a}, {b}) references an unknown node")
        pts = route_points(grid, nodes[a], nodes[b])
        edges[(a, b)] = polyline_length(nodes[a], pts)
    try:
        return PatrolGraph(nodes, edges)
    except ValueError as exc:
        raise MapFormatError(str(exc)) from None


def route_points(grid: GridMap, start: Position, goal: Position) -> list[Position]:
    """Points an agent at ``start`` visits to reach exactly ``goal``.

    The A* start-cell centre is skipped (the agent is already inside that
    cell) and the exact goal is appended after the goal-cell centre.
    """
    path = astar(grid, start, goal)
    pts = list(path.waypoints[1:])
    if not pts or pts[-1] != goal:
        pts.append(Position(*goal))
    return pts


def polyline_length(start: Position, pts) -> float:
    total = 0.0
    prev = start
    for p in pts:
        total += math.dist(prev, p)
        prev = p
    return total
