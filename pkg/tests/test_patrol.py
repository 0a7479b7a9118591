import numpy as np
import pytest

from hetpatrol.patrol import (
    IdlenessLedger, SebsSelector, merge_visit_report, perceived_idleness, record_visit, sebs_select,
)
from hetpatrol.worldmap import PatrolGraph, Position


class TestLedger:
    def test_initial(self):
        led = IdlenessLedger([1, 2])
        assert perceived_idleness(led, 1, 50) == 50

    def test_visit(self):
        led = IdlenessLedger([3])
        record_visit(led, 3, 500)
        assert perceived_idleness(led, 3, 500) == 0
        assert perceived_idleness(led, 3, 560) == 60

    def test_arithmetic(self):
        led = IdlenessLedger([1])
        record_visit(led, 1, 100)
        assert perceived_idleness(led, 1, 250) == 150

    def test_idempotent(self):
        a, b = IdlenessLedger([1, 2]), IdlenessLedger([1, 2])
        record_visit(a, 1, 10)
        record_visit(a, 1, 10)
        record_visit(b, 1, 10)
        assert a.last_visit == b.last_visit

    def test_merge_max(self):
        led = IdlenessLedger([1])
        record_visit(led, 1, 100)
        merge_visit_report(led, 1, 50)
        assert led.last_visit[1] == 100
        merge_visit_report(led, 1, 100)
        assert led.last_visit[1] == 100
        merge_visit_report(led, 1, 150)
        assert led.last_visit[1] == 150

    def test_deltas(self):
        led = IdlenessLedger([1, 2, 3])
        record_visit(led, 2, 5)
        merge_visit_report(led, 3, 7)
        assert led.take_deltas() == [(2, 5), (3, 7)]
        assert led.take_deltas() == []

    def test_unknown_node(self):
        with pytest.raises(KeyError):
            perceived_idleness(IdlenessLedger([1]), 9, 0)


class TestSebs:
    def graph(self):
        return PatrolGraph({0: Position(0, 0), 1: Position(2, 0), 2: Position(-2, 0), 3: Position(0, 5)},
                           {(0, 1): 2.0, (0, 2): 2.0, (1, 3): 6.0})

    def test_single_neighbor(self, rng):
        g = self.graph()
        assert sebs_select(g, 2, IdlenessLedger(g.node_ids), {}, 10.0, rng) == 0

    def test_higher_idleness_wins(self, rng):
        g = self.graph()
        led = IdlenessLedger(g.node_ids)
        record_visit(led, 1, 0)
        record_visit(led, 2, 90)
        assert sebs_select(g, 0, led, {}, 100.0, rng) == 1

    def test_intentions_penalised(self, rng):
        g = self.graph()
        led = IdlenessLedger(g.node_ids)
        sel = SebsSelector()
        scores = sel.scores(g, 0, led, {7: 1, 8: 1}, 100.0)
        assert scores[2] / scores[1] == pytest.approx(4.0)
        assert sel.select(g, 0, led, {7: 1, 8: 1}, 100.0, rng) == 2

    def test_tie_broken_by_rng(self):
        g = self.graph()
        led = IdlenessLedger(g.node_ids)
        picks = {sebs_select(g, 0, led, {}, 100.0, np.random.default_rng(s)) for s in range(40)}
        assert picks == {1, 2}

    def test_likelihood_bounded(self, rng):
        g = self.graph()
        led = IdlenessLedger(g.node_ids)
        sel = SebsSelector(l_max=16.0)
        for now in (10.0, 50.0, 400.0):
            s = sel.scores(g, 0, led, {}, now)
            assert all(0 < v <= 16.0 + 1e-9 for v in s.values())
