import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hetpatrol.search import (
    BestReport, EcoliState, Mode, PSOParams, PSOState, Reading, SwarmKnowledge, better, ecoli_propose,
    ecoli_turn, hcpso_assign, pso_propose, repulsion, update_knowledge,
)
from hetpatrol.worldmap import Position

O = Position(0.0, 0.0)


class TestKnowledge:
    def test_first_reading(self):
        k = update_knowledge(SwarmKnowledge(), Reading(O, -60.0), [], -20.0, self_id=1)
        assert k.pbest == Reading(O, -60.0)
        assert k.gbest == BestReport(O, -60.0, 1)
        assert not k.found

    def test_heard_better(self):
        k = update_knowledge(SwarmKnowledge(), Reading(O, -50.0), [], -20.0, self_id=0)
        k = update_knowledge(k, None, [BestReport(Position(3, 3), -30.0, 4)], -20.0, self_id=0)
        assert k.gbest.dbm == -30.0 and k.pbest.dbm == -50.0

    def test_found(self):
        k = update_knowledge(SwarmKnowledge(), Reading(O, -19.0), [], -20.0)
        assert k.found

    def test_found_sticky(self):
        k = SwarmKnowledge(found=True)
        assert update_knowledge(k, Reading(O, -80.0), [], -20.0).found

    def test_tie_lowest_reporter(self):
        assert better(BestReport(O, -40.0, 5), BestReport(Position(1, 1), -40.0, 2)).reporter == 2
        assert better(BestReport(O, -40.0, 2), BestReport(Position(1, 1), -40.0, 5)).reporter == 2

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.integers(-80, -21), st.integers(0, 9)), min_size=1, max_size=8),
           st.randoms())
    def test_order_independent(self, reports, rnd):
        reps = [BestReport(Position(float(r), 0.0), float(d), r) for d, r in reports]
        a = update_knowledge(SwarmKnowledge(), None, reps, -20.0)
        shuffled = list(reps)
        rnd.shuffle(shuffled)
        b = update_knowledge(SwarmKnowledge(), None, shuffled, -20.0)
        assert a == b


class TestPSO:
    def test_fixed_point(self, rng):
        k = SwarmKnowledge(Reading(O, -40.0), BestReport(O, -40.0, 0))
        goal, caused, st_ = pso_propose(O, PSOState(), k, [], PSOParams(inertia=0.0), rng)
        assert goal == O and not caused and st_.velocity == (0.0, 0.0)

    def test_no_repulsion_outside_radius(self):
        assert repulsion(O, [Position(3.0, 0.0), Position(0.0, -5.0)], PSOParams()) == (0.0, 0.0)

    def test_half_radius(self):
        rx, ry = repulsion(O, [Position(1.5, 0.0)], PSOParams())
        assert (rx, ry) == pytest.approx((-1.0, 0.0))

    def test_velocity_clamped(self, rng):
        k = SwarmKnowledge(Reading(Position(50, 50), -40.0), BestReport(Position(50, 50), -40.0, 0))
        goal, _, st_ = pso_propose(O, PSOState(), k, [], PSOParams(), rng)
        assert math.hypot(*st_.velocity) == pytest.approx(2.0)
        assert math.dist(goal, O) == pytest.approx(2.0)

    def test_formula(self):
        p = PSOParams(repulsion_strength=0.0)
        k = SwarmKnowledge(Reading(Position(0.2, 0.1), -40.0), BestReport(Position(-0.3, 0.4), -35.0, 1))
        pos = Position(0.1, 0.1)
        draws = np.random.default_rng(3).random(4)
        goal, _, st_ = pso_propose(pos, PSOState((0.1, -0.2)), k, [], p, np.random.default_rng(3))
        vx = 0.7 * 0.1 + 1.0 * draws[0] * (0.2 - 0.1) + 2.5 * draws[2] * (-0.3 - 0.1)
        vy = 0.7 * -0.2 + 1.0 * draws[1] * (0.1 - 0.1) + 2.5 * draws[3] * (0.4 - 0.1)
        assert st_.velocity == pytest.approx((vx, vy))
        assert goal == pytest.approx((0.1 + vx, 0.1 + vy))

    def test_repulsion_flag(self, rng):
        k = SwarmKnowledge(Reading(O, -40.0), BestReport(O, -40.0, 0))
        _, caused, _ = pso_propose(O, PSOState(), k, [Position(0.5, 0.0)], PSOParams(), rng,
                                   is_free=lambda p: False)
        assert caused

    def test_needs_bests(self, rng):
        with pytest.raises(ValueError):
            pso_propose(O, PSOState(), SwarmKnowledge(), [], PSOParams(), rng)


class TestEcoli:
    def test_first_call_straight(self):
        assert ecoli_turn(1.0, -50.0, None, 0.9) == pytest.approx(1.0)

    def test_reverse(self):
        assert ecoli_turn(0.5, -50.0, -40.0, 0.9) == pytest.approx(0.5 + math.pi)

    def test_below_floor_counts_as_worse(self, rng):
        s = EcoliState(heading=0.0, prev_reading=-70.0)
        _, s2 = ecoli_propose(O, s, None, rng)
        assert s2.prev_reading == -math.inf
        d = (s2.heading - math.pi) % (2 * math.pi)
        assert min(d, 2 * math.pi - d) <= math.pi / 4 + 1e-9

    def test_step_length(self, rng):
        goal, _ = ecoli_propose(O, EcoliState(heading=0.3, step_length=1.0), -50.0, rng)
        assert math.dist(goal, O) == pytest.approx(1.0)

    def test_branch_frequencies(self):
        rng = np.random.default_rng(2024)
        plus = minus = 0
        n = 10_000
        for _ in range(n):
            h = ecoli_turn(1.0, -50.0, -50.0, float(rng.random()))
            d = (h - 1.0 + math.pi) % (2 * math.pi) - math.pi
            plus += math.isclose(d, math.pi / 4)
            minus += math.isclose(d, -math.pi / 4)
        assert abs(plus / n - 0.25) <= 0.02
        assert abs(minus / n - 0.25) <= 0.02

    def test_bad_step(self):
        with pytest.raises(ValueError):
            EcoliState(step_length=0.0)


class TestHcpso:
    def test_single(self):
        k = update_knowledge(SwarmKnowledge(), Reading(O, -50.0), [], -20.0, self_id=3)
        assert hcpso_assign([(3, k)]) == {3: Mode.ECOLI}

    def test_holder(self):
        k = SwarmKnowledge(Reading(O, -30.0), BestReport(O, -30.0, 1))
        assert hcpso_assign([(1, k)])[1] is Mode.ECOLI

    def test_other_reporter(self):
        k = SwarmKnowledge(Reading(O, -40.0), BestReport(O, -30.0, 2))
        assert hcpso_assign([(1, k)])[1] is Mode.PSO
