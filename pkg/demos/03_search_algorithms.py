"""
Three ways to home in on an emitter
===================================

Same team, same seed, three search rules: charged PSO, E. coli chemotaxis
and the hybrid. The trace shows who searched and when the source was found.
"""

from collections import Counter

from hetpatrol.engine import TrialConfig, run_trial
from hetpatrol.maps import load_world
from hetpatrol.search import Algorithm
from hetpatrol.signalmodel import SignalParams, build_signal_map

world, sources = load_world("cumberland")
sm = build_signal_map(world.grid, sources[0], SignalParams())

for alg in Algorithm:
    trace = []
    cfg = TrialConfig(n_agents=6, n_searchers=4, algorithm=alg, comm_range=None, pm=True, seed=11)
    res = run_trial(cfg, world, sm, trace)
    events = Counter(line.split()[2] for line in trace)
    modes = Counter(part for line in trace if "search_goal" in line for part in line.split() if part.startswith("mode="))
    print(f"{alg.value:>6}: anomaly at t={res.t_appear}, found={res.success}, ttf={res.ttf}, "
          f"idleness={res.avg_idleness:.1f}")
    print(f"        search goals {events['search_goal']}, patrol goals {events['patrol_goal']}, {dict(modes)}")

# The first few trace lines of the last run, in the CLI's --trace format.
print()
print("\n".join(trace[:8]))
