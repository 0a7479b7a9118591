"""Per-trial simulation loop.

Each timestep runs five global phases in agent-id order: sense, update
knowledge, communicate, decide, move. One trial owns one seeded Philox
generator whose draws happen in a fixed order:

1. ``t_appear`` (one integer in the anomaly window);
2. the searcher subset (``choice`` without replacement);
3. during the run, in agent-id order within the decision phase: SEBS tie
   breaks, the initial ECOLI heading when an agent starts searching, the
   four PSO coefficients or the single ECOLI tumble roll per proposal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .patrol import IdlenessLedger, PatrolState, SebsSelector, merge_visit_report, record_visit
from .search import (
    Algorithm,
    BestReport,
    EcoliState,
    Mode,
    PSOParams,
    PSOState,
    Reading,
    SwarmKnowledge,
    ecoli_propose,
    hcpso_assign,
    pso_propose,
    update_knowledge,
)
from .signalmodel import SignalMap, sample_rssi
from .worldmap import GridMap, NoRouteError, PatrolGraph, Position, project_goal, route_points

GLOBAL = None  # comm_range value meaning unlimited range


class Role(str, Enum):
    PATROLLER = "patroller"
    SEARCHER = "searcher"


class ConfigError(ValueError):
    pass


@dataclass
class World:
    """A grid plus its patrol graph, with a cache of node-to-node routes."""

    grid: GridMap
    graph: PatrolGraph
    name: str = "world"
    _routes: dict = field(default_factory=dict, repr=False)

    def edge_route(self, a: int, b: int) -> list[Position]:
        key = (a, b)
        pts = self._routes.get(key)
        if pts is None:
            pts = route_points(self.grid, self.graph.nodes[a], self.graph.nodes[b])
            self._routes[key] = pts
        return pts


@dataclass(frozen=True)
class TrialConfig:
    """Everything that determines one trial, seed included."""

    n_agents: int
    n_searchers: int
    algorithm: Algorithm = Algorithm.PSO
    comm_range: Optional[float] = GLOBAL
    pm: bool = True
    seed: int = 0
    map_id: str = "desk"
    source_id: int = 0
    duration: int = 2000
    v_max: float = 0.4
    anomaly_window: tuple[int, int] = (400, 600)
    idleness_start: int = 250
    replan_interval: int = 5
    ecoli_step: float = 1.0
    sebs_l_max: float = 16.0
    pso: PSOParams = PSOParams()

    def validate(self) -> None:
        if self.n_agents < 1:
            raise ConfigError("need at least one agent")
        if not 0 <= self.n_searchers <= self.n_agents:
            raise ConfigError(f"k={self.n_searchers} outside [0, {self.n_agents}]")
        lo, hi = self.anomaly_window
        if not 0 <= lo <= hi:
            raise ConfigError("bad anomaly window")
        if self.duration <= hi:
            raise ConfigError("duration must exceed the anomaly window end")
        if not 0 <= self.idleness_start <= self.duration:
            raise ConfigError("idleness_start outside the trial")
        if self.comm_range is not None and self.comm_range < 0:
            raise ConfigError("comm_range must be non-negative")
        if not self.v_max > 0 or self.replan_interval < 1:
            raise ConfigError("v_max and replan_interval must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")


@dataclass(frozen=True)
class TrialResult:
    config: TrialConfig
    t_appear: int
    avg_idleness: float
    ttf: Optional[int]
    success: bool

    @property
    def censored(self) -> bool:
        return self.ttf is None


@dataclass
class Message:
    sender: int
    pos: Position
    gbest: Optional[BestReport]
    found: bool
    intention: Optional[int]
    visit_reports: list


class Agent:
    __slots__ = ("id", "role", "can_measure", "pos", "searching", "patrol", "ledger",
                 "intentions", "selector", "knowledge", "pso", "ecoli", "route",
                 "since_plan", "neighbors", "reading", "heard_found", "heard")

    def __init__(self, aid: int, role: Role, can_measure: bool, pos: Position, node: int,
                 node_ids, cfg: TrialConfig):
        self.id = aid
        self.role = role
        self.can_measure = can_measure
        self.pos = pos
        self.searching = False
        self.patrol = PatrolState(current_node=node)
        self.ledger = IdlenessLedger(node_ids)
        self.intentions: dict[int, Optional[int]] = {}
        self.selector = SebsSelector(cfg.sebs_l_max)
        self.knowledge = SwarmKnowledge()
        self.pso = PSOState()
        self.ecoli = EcoliState(step_length=cfg.ecoli_step)
        self.route: list[Position] = []
        self.since_plan = 0
        self.neighbors: list[Position] = []
        self.reading: Optional[float] = None
        self.heard: list[BestReport] = []
        self.heard_found = False

    @property
    def intention(self) -> Optional[int]:
        return None if self.searching else self.patrol.goal_node


def communicate(positions, comm_range: Optional[float]) -> list[list[int]]:
    """Index lists of senders heard by each agent; ``None`` range means global."""
    n = len(positions)
    out: list[list[int]] = [[] for _ in range(n)]
    if comm_range is None:
        for j in range(n):
            out[j] = [i for i in range(n) if i != j]
        return out
    r2 = comm_range * comm_range
    for i in range(n):
        xi, yi = positions[i]
        for j in range(i + 1, n):
            dx = xi - positions[j][0]
            dy = yi - positions[j][1]
            if dx * dx + dy * dy <= r2:
                out[i].append(j)
                out[j].append(i)
    for lst in out:
        lst.sort()
    return out


class IdlenessMeter:
    """Running average of ground-truth mean node idleness from ``start`` on."""

    def __init__(self, node_ids, start: int):
        self.last_visit = {n: 0 for n in node_ids}
        self.start = start
        self.total = 0.0
        self.samples = 0

    def visit(self, node: int, now: int) -> None:
        self.last_visit[node] = now

    def accumulate(self, now: int) -> None:
        if now < self.start:
            return
        lv = self.last_visit
        self.total += now - sum(lv.values()) / len(lv)
        self.samples += 1

    @property
    def average(self) -> float:
        return self.total / self.samples if self.samples else 0.0


def start_nodes(node_ids, n_agents: int) -> list[int]:
    """Evenly spaced node indices ``ceil(i * M / N)`` for agents ``i = 0..N-1``."""
    m = len(node_ids)
    return [node_ids[min(-(-i * m // n_agents), m - 1)] for i in range(n_agents)]


def _advance(pos: Position, route: list[Position], budget: float) -> Position:
    """Walk ``budget`` metres along ``route`` (consumed in place)."""
    x, y = pos
    while route and budget > 0.0:
        tx, ty = route[0]
        d = math.hypot(tx - x, ty - y)
        if d <= budget:
            x, y = tx, ty
            budget -= d
            route.pop(0)
        else:
            f = budget / d
            x += (tx - x) * f
            y += (ty - y) * f
            budget = 0.0
    return Position(x, y)


def run_trial(cfg: TrialConfig, world: World, sm: SignalMap, trace: Optional[list] = None,
              observer: Optional[Callable[[int, list], None]] = None) -> TrialResult:
    """Simulate one trial and return its metrics.

    Args:
        cfg: trial configuration.
        world: grid and patrol graph; must share the grid with ``sm``.
        sm: precomputed signal map for the emitter.
        trace: if a list is passed, one ``t=<int> agent=<id> <event> ...``
            line per event is appended to it.
        observer: called as ``observer(t, agents)`` after each movement phase.
    """
    cfg.validate()
    grid, graph = world.grid, world.graph
    if sm.grid is not grid and not (sm.grid.width == grid.width and sm.grid.height == grid.height
                                    and np.array_equal(sm.grid.occupied, grid.occupied)):
        raise ConfigError("signal map and world use different grids")
    if len(graph.nodes) < 2:
        raise ConfigError("patrol graph needs at least two nodes")
    node_ids = graph.node_ids
    for n in node_ids:
        if not graph.neighbors(n):
            raise ConfigError(f"patrol node {n} is isolated")

    def log(t: int, aid: int, event: str) -> None:
        if trace is not None:
            trace.append(f"t={t} agent={aid} {event}")

    rng = np.random.Generator(np.random.Philox(cfg.seed))
    lo, hi = cfg.anomaly_window
    t_appear = int(rng.integers(lo, hi + 1))
    searchers = set(int(i) for i in rng.choice(cfg.n_agents, size=cfg.n_searchers, replace=False))
    log(0, -1, f"anomaly_scheduled t_appear={t_appear}")

    agents: list[Agent] = []
    for i, node in enumerate(start_nodes(node_ids, cfg.n_agents)):
        role = Role.SEARCHER if i in searchers else Role.PATROLLER
        can_measure = role is Role.SEARCHER or cfg.pm
        a = Agent(i, role, can_measure, graph.nodes[node], node, node_ids, cfg)
        agents.append(a)
        log(0, i, f"spawn role={role.value} node={node}")

    meter = IdlenessMeter(node_ids, cfg.idleness_start)
    threshold = sm.params.found_threshold
    pso_params = cfg.pso
    is_free = grid.is_free_at
    t_found: Optional[int] = None
    emitter_on = False
    budget = cfg.v_max * 1.0

    for t in range(1, cfg.duration + 1):
        if t == t_appear:
            emitter_on = True
            log(t, -1, "anomaly_on")

        # 1. sensing
        for a in agents:
            a.reading = None
            if emitter_on and a.can_measure:
                a.reading = sample_rssi(sm, a.pos)

        # 2. knowledge update and found check
        for a in agents:
            own = Reading(a.pos, a.reading) if a.reading is not None else None
            was_found = a.knowledge.found
            a.knowledge = update_knowledge(a.knowledge, own, (), threshold, self_id=a.id)
            if own is not None and own.dbm >= threshold and t_found is None:
                t_found = t
                log(t, a.id, f"found rssi={own.dbm:.4f}")
            if a.knowledge.found and not was_found:
                log(t, a.id, "learned_found")
        if t_found is not None and emitter_on:
            emitter_on = False
            log(t, -1, "anomaly_off")

        # 3. communication
        msgs = [Message(a.id, a.pos, a.knowledge.gbest, a.knowledge.found, a.intention,
                        a.ledger.take_deltas()) for a in agents]
        heard = communicate([a.pos for a in agents], cfg.comm_range)
        for a, senders in zip(agents, heard):
            a.neighbors = []
            reports = []
            heard_found = False
            for s in senders:
                m = msgs[s]
                a.neighbors.append(m.pos)
                reports.append(m.gbest)
                heard_found = heard_found or m.found
                a.intentions[m.sender] = m.intention
                for node, when in m.visit_reports:
                    merge_visit_report(a.ledger, node, when)
            if senders:
                was_found = a.knowledge.found
                a.knowledge = update_knowledge(a.knowledge, None, reports, threshold,
                                               self_id=a.id, heard_found=heard_found)
                if a.knowledge.found and not was_found:
                    log(t, a.id, "learned_found")

        # 4. decisions
        for a in agents:
            k = a.knowledge
            if a.searching and k.found:
                a.searching = False
                _return_to_patrol(a, world, t, log)
            elif (not a.searching and a.role is Role.SEARCHER and k.gbest is not None
                  and not k.found):
                a.searching = True
                a.route = []
                a.patrol.goal_node = None
                a.patrol.current_node = None
                a.pso = PSOState()
                a.ecoli = EcoliState(heading=float(rng.random()) * 2.0 * math.pi,
                                     step_length=cfg.ecoli_step)
                a.since_plan = cfg.replan_interval
                log(t, a.id, "start_search")

            if a.searching:
                a.since_plan += 1
                if not a.route or a.since_plan >= cfg.replan_interval:
                    _plan_search(a, cfg, grid, rng, pso_params, is_free, t, log)
            elif not a.route and a.patrol.current_node is not None:
                at = a.patrol.current_node
                others = {j: n for j, n in a.intentions.items() if j != a.id}
                nxt = a.selector.select(graph, at, a.ledger, others, float(t), rng)
                a.patrol.goal_node = nxt
                a.route = list(world.edge_route(at, nxt))
                a.patrol.current_node = None
                log(t, a.id, f"patrol_goal node={nxt}")

        # 5. movement
        for a in agents:
            if a.route:
                a.pos = _advance(a.pos, a.route, budget)
                if not a.route and not a.searching and a.patrol.goal_node is not None:
                    node = a.patrol.goal_node
                    a.patrol.current_node = node
                    a.patrol.goal_node = None
                    record_visit(a.ledger, node, float(t))
                    meter.visit(node, t)
                    log(t, a.id, f"visit node={node}")
        meter.accumulate(t)
        if observer is not None:
            observer(t, agents)

    ttf = t_found - t_appear if t_found is not None else None
    return TrialResult(cfg, t_appear, meter.average, ttf, t_found is not None)


def _return_to_patrol(a: Agent, world: World, t: int, log) -> None:
    graph = world.graph
    nearest = min(graph.node_ids, key=lambda n: (math.dist(a.pos, graph.nodes[n]), n))
    try:
        a.route = route_points(world.grid, a.pos, graph.nodes[nearest])
    except NoRouteError:
        a.route = []
    a.patrol.goal_node = nearest
    a.patrol.current_node = None
    if not a.route:
        a.patrol.current_node = nearest
        a.patrol.goal_node = None
    log(t, a.id, f"stop_search return_node={nearest}")


def _plan_search(a: Agent, cfg: TrialConfig, grid: GridMap, rng, pso_params, is_free, t, log) -> None:
    k = a.knowledge
    a.since_plan = 0
    if cfg.algorithm is Algorithm.ECOLI:
        mode = Mode.ECOLI
    elif cfg.algorithm is Algorithm.PSO:
        mode = Mode.PSO
    else:
        mode = hcpso_assign([(a.id, k)])[a.id]

    repelled = False
    if mode is Mode.ECOLI:
        proposed, a.ecoli = ecoli_propose(a.pos, a.ecoli, a.reading, rng)
    else:
        if k.pbest is None:
            # heard a best but never sensed above the floor: both pulls point at it
            k = SwarmKnowledge(Reading(k.gbest.pos, k.gbest.dbm), k.gbest, k.found)
        proposed, repelled, a.pso = pso_propose(a.pos, a.pso, k, a.neighbors, pso_params, rng, is_free)
    goal = project_goal(grid, a.pos, proposed, repelled)
    if goal is None:
        a.route = []
        log(t, a.id, f"search_goal mode={mode.value} stay")
        return
    try:
        a.route = route_points(grid, a.pos, goal)
    except NoRouteError:
        a.route = []
        log(t, a.id, f"search_goal mode={mode.value} unreachable")
        return
    log(t, a.id, f"search_goal mode={mode.value} x={goal[0]:.4f} y={goal[1]:.4f}")
