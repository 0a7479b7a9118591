import math
import re

import pytest

from conftest import grid_from
from hetpatrol.engine import (
    ConfigError, IdlenessMeter, Role, TrialConfig, World, _advance, communicate, run_trial, start_nodes,
)
from hetpatrol.search import Algorithm
from hetpatrol.signalmodel import SignalParams, build_signal_map
from hetpatrol.worldmap import Position, load_graph


@pytest.fixture(scope="module")
def ring_world():
    """5 m square room, four corner nodes; the emitter sits on node 0."""
    g = grid_from(["." * 10] * 10, 0.5)
    graph = load_graph("node 0 1.25 1.25\nnode 1 3.75 1.25\nnode 2 3.75 3.75\nnode 3 1.25 3.75\n"
                       "edge 0 1\nedge 1 2\nedge 2 3\nedge 0 3\n", g)
    world = World(g, graph, "ring")
    return world, build_signal_map(g, Position(1.25, 1.25), SignalParams())


class TestCommunicate:
    def test_in_range(self):
        assert communicate([Position(0, 0), Position(2, 0)], 2.5) == [[1], [0]]

    def test_out_of_range(self):
        assert communicate([Position(0, 0), Position(3, 0)], 2.5) == [[], []]

    def test_boundary_inclusive(self):
        assert communicate([Position(0, 0), Position(2.5, 0)], 2.5) == [[1], [0]]

    def test_global(self):
        out = communicate([Position(i * 100, 0) for i in range(5)], None)
        assert sum(len(x) for x in out) == 5 * 4
        assert all(j not in out[j] for j in range(5))

    def test_symmetric(self, rng):
        pos = [Position(*rng.uniform(0, 10, 2)) for _ in range(12)]
        out = communicate(pos, 3.0)
        for j, senders in enumerate(out):
            for i in senders:
                assert j in out[i]
                assert math.dist(pos[i], pos[j]) <= 3.0


class TestIdlenessMeter:
    def test_visited_every_step(self):
        m = IdlenessMeter([0], 250)
        for t in range(1, 2001):
            m.visit(0, t)
            m.accumulate(t)
        assert m.average == 0

    def test_never_visited(self):
        m = IdlenessMeter([0], 250)
        for t in range(1, 2001):
            m.accumulate(t)
        assert m.average == pytest.approx(sum(range(250, 2001)) / 1751) == pytest.approx(1125)

    def test_half(self):
        m = IdlenessMeter([0, 1], 250)
        for t in range(1, 2001):
            m.visit(0, t)
            m.accumulate(t)
        assert m.average == pytest.approx(562.5)


def test_start_nodes():
    assert start_nodes([10, 11, 12, 13, 14, 15], 3) == [10, 12, 14]
    assert start_nodes([1, 2], 4) == [1, 2, 2, 2]


def test_advance_budget():
    route = [Position(1, 0), Position(1, 1)]
    p = _advance(Position(0, 0), route, 1.5)
    assert p == pytest.approx((1.0, 0.5)) and route == [Position(1, 1)]


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(n_agents=4, n_searchers=5), dict(n_agents=0, n_searchers=0),
                                    dict(n_agents=2, n_searchers=1, duration=500),
                                    dict(n_agents=2, n_searchers=1, comm_range=-1.0),
                                    dict(n_agents=2, n_searchers=1, seed=-3)])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            TrialConfig(**kw).validate()


def _cfg(**kw):
    base = dict(n_agents=4, n_searchers=2, algorithm=Algorithm.PSO, comm_range=2.5, pm=True, seed=1,
                map_id="open", source_id=0, duration=800)
    base.update(kw)
    return TrialConfig(**base)


class TestTrial:
    def test_all_patrol_never_succeeds(self, open_world, open_signal):
        world, _ = open_world
        for seed in range(4):
            res = run_trial(_cfg(n_searchers=0, seed=seed), world, open_signal[0])
            assert not res.success and res.ttf is None and math.isfinite(res.avg_idleness)

    def test_deterministic(self, open_world, open_signal):
        world, _ = open_world
        t1, t2 = [], []
        r1 = run_trial(_cfg(seed=99, algorithm=Algorithm.HCPSO), world, open_signal[1], t1)
        r2 = run_trial(_cfg(seed=99, algorithm=Algorithm.HCPSO), world, open_signal[1], t2)
        assert r1 == r2 and t1 == t2

    def test_all_search_global_open(self, open_world, open_signal):
        world, _ = open_world
        wins = sum(run_trial(_cfg(n_agents=4, n_searchers=4, comm_range=None, seed=s, duration=2000),
                             world, open_signal[0]).success for s in range(15))
        assert wins >= 14

    def test_ttf_matches_trace(self, open_world, open_signal):
        world, _ = open_world
        trace = []
        res = run_trial(_cfg(n_searchers=4, comm_range=None, seed=5, duration=2000), world,
                        open_signal[0], trace)
        assert res.success
        t_found = next(int(re.match(r"t=(\d+)", ln).group(1)) for ln in trace if " found " in ln)
        assert res.ttf == t_found - res.t_appear >= 0

    def test_patroller_measurement_triggers_found(self, ring_world):
        world, sm = ring_world
        res = run_trial(TrialConfig(n_agents=2, n_searchers=0, pm=True, seed=3, duration=1000), world, sm)
        assert res.success

    def test_no_pm_no_find(self, ring_world):
        world, sm = ring_world
        res = run_trial(TrialConfig(n_agents=2, n_searchers=0, pm=False, seed=3, duration=1000), world, sm)
        assert not res.success

    def test_found_propagates_globally(self, open_world, open_signal):
        world, _ = open_world
        trace = []
        res = run_trial(_cfg(n_searchers=4, comm_range=None, seed=5, duration=2000), world,
                        open_signal[0], trace)
        assert res.success
        t_found = next(int(re.match(r"t=(\d+)", ln).group(1)) for ln in trace if " found " in ln)
        learned = {int(re.search(r"agent=(\d+)", ln).group(1)) for ln in trace
                   if "learned_found" in ln and int(re.match(r"t=(\d+)", ln).group(1)) == t_found}
        assert learned == {0, 1, 2, 3}

    def test_mismatched_grid(self, open_world, ring_world):
        world, _ = open_world
        _, sm = ring_world
        with pytest.raises(ConfigError):
            run_trial(_cfg(), world, sm)


def test_invariants_small_batch(open_world, open_signal):
    world, _ = open_world
    for seed in range(5):
        cfg = _cfg(seed=seed, n_agents=5, n_searchers=3, algorithm=list(Algorithm)[seed % 3])
        prev = {}

        def obs(t, agents):
            for a in agents:
                if a.id in prev:
                    assert math.dist(prev[a.id], a.pos) <= cfg.v_max + 1e-9
                prev[a.id] = a.pos
                if a.role is Role.PATROLLER:
                    assert not a.searching
                assert world.grid.is_free_at(a.pos)

        res = run_trial(cfg, world, open_signal[seed % 3], observer=obs)
        assert 400 <= res.t_appear <= 600
