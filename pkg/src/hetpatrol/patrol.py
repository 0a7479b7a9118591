"""State Exchange Bayesian Strategy (SEBS) node selection and idleness ledgers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .worldmap import PatrolGraph, Position

DEFAULT_L_MAX = 16.0


class IdlenessLedger:
    """One agent's belief of when each patrol node was last visited.

    Every node starts at time 0. ``dirty`` collects nodes whose entry changed
    since the last :meth:`take_deltas`, for piggybacking on messages.
    """

    def __init__(self, node_ids):
        self.last_visit = {n: 0.0 for n in node_ids}
        self.dirty: set[int] = set()

    def __contains__(self, node: int) -> bool:
        return node in self.last_visit

    def copy(self) -> "IdlenessLedger":
        new = IdlenessLedger(())
        new.last_visit = dict(self.last_visit)
        new.dirty = set(self.dirty)
        return new

    def take_deltas(self) -> list[tuple[int, float]]:
        out = sorted((n, self.last_visit[n]) for n in self.dirty)
        self.dirty.clear()
        return out


def perceived_idleness(ledger: IdlenessLedger, node: int, now: float) -> float:
    try:
        return now - ledger.last_visit[node]
    except KeyError:
        raise KeyError(f"unknown node {node}") from None


def record_visit(ledger: IdlenessLedger, node: int, now: float) -> IdlenessLedger:
    if ledger.last_visit.get(node) != now:
        ledger.last_visit[node] = now
        ledger.dirty.add(node)
    return ledger


def merge_visit_report(ledger: IdlenessLedger, node: int, reported_time: float) -> IdlenessLedger:
    if reported_time > ledger.last_visit.get(node, -math.inf):
        ledger.last_visit[node] = reported_time
        ledger.dirty.add(node)
    return ledger


@dataclass
class PatrolState:
    current_node: Optional[int]
    goal_node: Optional[int] = None
    route: list[Position] = field(default_factory=list)


@dataclass
class SebsSelector:
    """Per-agent SEBS scorer; remembers the largest gain seen so far.

    Args:
        l_max: likelihood assigned to the largest gain seen; larger values
            make the choice more greedy in idleness.
    """

    l_max: float = DEFAULT_L_MAX
    g_max: float = 0.0

    def scores(self, graph: PatrolGraph, at: int, ledger: IdlenessLedger,
               intentions: dict[int, Optional[int]], now: float) -> dict[int, float]:
        neigh = graph.neighbors(at)
        if not neigh:
            raise ValueError(f"node {at} has no neighbours")
        gains = {j: perceived_idleness(ledger, j, now) / graph.edge_length(at, j) for j in neigh}
        top = max(gains.values())
        if top > self.g_max:
            self.g_max = top
        claimed: dict[int, int] = {}
        for node in intentions.values():
            if node is not None:
                claimed[node] = claimed.get(node, 0) + 1
        rate = math.log(self.l_max) / self.g_max if self.g_max > 0 else 0.0
        return {j: math.exp(g * rate) * 2.0 ** (-claimed.get(j, 0)) for j, g in gains.items()}

    def select(self, graph: PatrolGraph, at: int, ledger: IdlenessLedger,
               intentions: dict[int, Optional[int]], now: float, rng) -> int:
        scores = self.scores(graph, at, ledger, intentions, now)
        best = max(scores.values())
        winners = [j for j, s in scores.items() if s == best]
        if len(winners) == 1:
            return winners[0]
        return winners[int(rng.integers(len(winners)))]


def sebs_select(graph: PatrolGraph, at: int, ledger: IdlenessLedger,
                intentions: dict[int, Optional[int]], now: float, rng,
                selector: Optional[SebsSelector] = None) -> int:
    """Pick the next patrol node among the neighbours of ``at``.

    ``intentions`` maps other agents' ids to the node each last announced.
    A fresh selector is used when none is passed, which forgets the running
    maximum gain between calls.
    """
    if selector is None:
        selector = SebsSelector()
    return selector.select(graph, at, ledger, intentions, now, rng)
