"""Goal proposals for source seeking: charged PSO, E. coli chemotaxis and the hybrid."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple, Optional

from .worldmap import Position

TWO_PI = 2.0 * math.pi


class Algorithm(str, Enum):
    PSO = "pso"
    HCPSO = "hcpso"
    ECOLI = "ecoli"


class Mode(str, Enum):
    PSO = "pso"
    ECOLI = "ecoli"


class Reading(NamedTuple):
    pos: Position
    dbm: float


class BestReport(NamedTuple):
    pos: Position
    dbm: float
    reporter: int


def better(a: Optional[BestReport], b: Optional[BestReport]) -> Optional[BestReport]:
    """Higher dBm wins; equal dBm goes to the lower reporter id."""
    if a is None:
        return b
    if b is None:
        return a
    if b.dbm > a.dbm or (b.dbm == a.dbm and b.reporter < a.reporter):
        return b
    return a


@dataclass(frozen=True)
class SwarmKnowledge:
    """What one agent believes about the source.

    Attributes:
        pbest: the agent's own best reading.
        gbest: best report known to the agent, its own included.
        found: sticky flag, set once any reading reached the found threshold.
    """

    pbest: Optional[Reading] = None
    gbest: Optional[BestReport] = None
    found: bool = False


def update_knowledge(k: SwarmKnowledge, own_reading: Optional[Reading], heard,
                     found_threshold: float, self_id: int = -1,
                     heard_found: bool = False) -> SwarmKnowledge:
    """Fold a new reading and heard best reports into ``k``.

    ``own_reading`` is None when the agent cannot measure or the signal is
    below the floor. ``heard`` is an iterable of :class:`BestReport`.
    """
    pbest, gbest, found = k.pbest, k.gbest, k.found or heard_found
    if own_reading is not None:
        if pbest is None or own_reading.dbm > pbest.dbm:
            pbest = own_reading
        gbest = better(gbest, BestReport(own_reading.pos, own_reading.dbm, self_id))
        if own_reading.dbm >= found_threshold:
            found = True
    for rep in heard:
        if rep is None:
            continue
        gbest = better(gbest, rep)
        if rep.dbm >= found_threshold:
            found = True
    return SwarmKnowledge(pbest, gbest, found)


@dataclass(frozen=True)
class PSOParams:
    cognitive: float = 1.0
    social: float = 2.5
    inertia: float = 0.7
    repulsion_strength: float = 2.0
    repulsion_radius: float = 3.0
    v_max_goal: float = 2.0

    def __post_init__(self):
        for name in ("cognitive", "social", "inertia", "repulsion_strength",
                     "repulsion_radius", "v_max_goal"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class PSOState:
    velocity: tuple[float, float] = (0.0, 0.0)


def repulsion(pos: Position, neighbors, params: PSOParams) -> tuple[float, float]:
    """Sum of linearly decaying pushes away from each neighbour position."""
    rx = ry = 0.0
    radius = params.repulsion_radius
    if radius <= 0 or params.repulsion_strength == 0:
        return rx, ry
    for n in neighbors:
        dx = pos[0] - n[0]
        dy = pos[1] - n[1]
        d = math.hypot(dx, dy)
        if d == 0.0 or d >= radius:
            continue
        mag = params.repulsion_strength * (1.0 - d / radius)
        rx += mag * dx / d
        ry += mag * dy / d
    return rx, ry


def pso_propose(pos: Position, state: PSOState, k: SwarmKnowledge, neighbors,
                params: PSOParams, rng, is_free=None) -> tuple[Position, bool, PSOState]:
    """One charged-PSO velocity update.

    Draws r1x, r1y, r2x, r2y from ``rng`` in that order. ``is_free`` is a
    predicate on positions used to report whether an occupied goal is due to
    repulsion; without it the flag is never raised.

    Returns:
        ``(goal, repulsion_caused, new_state)``.
    """
    if k.pbest is None or k.gbest is None:
        raise ValueError("PSO needs both a personal and a global best")
    r1x, r1y, r2x, r2y = (float(v) for v in rng.random(4))
    vx, vy = state.velocity
    px, py = k.pbest.pos
    gx, gy = k.gbest.pos
    rx, ry = repulsion(pos, neighbors, params)
    vx = (params.inertia * vx + params.cognitive * r1x * (px - pos[0])
          + params.social * r2x * (gx - pos[0]) + rx)
    vy = (params.inertia * vy + params.cognitive * r1y * (py - pos[1])
          + params.social * r2y * (gy - pos[1]) + ry)
    speed = math.hypot(vx, vy)
    if speed > params.v_max_goal:
        scale = params.v_max_goal / speed
        vx *= scale
        vy *= scale
    goal = Position(pos[0] + vx, pos[1] + vy)
    caused = (rx != 0.0 or ry != 0.0) and is_free is not None and not is_free(goal)
    return goal, caused, PSOState((vx, vy))


@dataclass(frozen=True)
class EcoliState:
    heading: float = 0.0
    prev_reading: Optional[float] = None
    step_length: float = 1.0

    def __post_init__(self):
        if not self.step_length > 0:
            raise ValueError("step_length must be positive")


def ecoli_turn(heading: float, reading: float, prev: Optional[float], u: float) -> float:
    """Reverse on a worse reading, then roll for a +/-45 degree tumble."""
    if prev is not None and reading < prev:
        heading += math.pi
    if u < 0.25:
        heading += math.pi / 4
    elif u < 0.5:
        heading -= math.pi / 4
    return heading % TWO_PI


def ecoli_propose(pos: Position, state: EcoliState, reading: Optional[float],
                  rng) -> tuple[Position, EcoliState]:
    """Chemotaxis step; a None reading (below floor) compares as minus infinity.

    Consumes one uniform draw from ``rng``.
    """
    r = -math.inf if reading is None else reading
    u = float(rng.random())
    heading = ecoli_turn(state.heading, r, state.prev_reading, u)
    goal = Position(pos[0] + state.step_length * math.cos(heading),
                    pos[1] + state.step_length * math.sin(heading))
    return goal, replace(state, heading=heading, prev_reading=r)


def hcpso_assign(agents) -> dict[int, Mode]:
    """ECOLI for each agent that is the reporter of the global best it believes, PSO otherwise.

    Args:
        agents: iterable of ``(agent_id, SwarmKnowledge)``.
    """
    modes = {}
    for aid, k in agents:
        holds = (k.pbest is not None and k.gbest is not None
                 and k.gbest.reporter == aid and k.pbest.dbm == k.gbest.dbm)
        modes[aid] = Mode.ECOLI if holds else Mode.PSO
    return modes
