"""
Patrolling with SEBS
====================

A team with no searchers just patrols. Watch average idleness fall as the
team grows.
"""

from hetpatrol.engine import TrialConfig, run_trial
from hetpatrol.maps import load_world
from hetpatrol.signalmodel import SignalParams, build_signal_map

world, sources = load_world("cumberland")
sm = build_signal_map(world.grid, sources[0], SignalParams())
print(f"{len(world.graph.nodes)} patrol nodes, {len(world.graph.edges)} edges")

# Idleness of a node is the time since anyone last visited it. The trial
# reports its average over nodes and over t = 250..2000.
for n in (2, 4, 6, 8):
    res = run_trial(TrialConfig(n_agents=n, n_searchers=0, comm_range=None, seed=1), world, sm)
    print(f"N={n}: average idleness {res.avg_idleness:7.1f} s, found={res.success}")

# Limited radio range means agents share intentions and visit records less
# often, so they duplicate effort.
for rng in (None, 4.0, 1.5):
    res = run_trial(TrialConfig(n_agents=6, n_searchers=0, comm_range=rng, seed=1), world, sm)
    label = "global" if rng is None else f"{rng} m"
    print(f"N=6, range {label:>6}: average idleness {res.avg_idleness:7.1f} s")
