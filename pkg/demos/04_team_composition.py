"""
How many searchers?
===================

Vary the number of searchers k in a team of six, with a 2.5 m radio range,
and count how often the emitter is found. A few patrollers among the
searchers keep the swarm connected and sweeping.
"""

import tempfile
from pathlib import Path

from hetpatrol.analysis import distribution_class
from hetpatrol.experiments import parse_sweep_config, read_records, run_sweep

config = parse_sweep_config("""
map.cumberland = 6
algorithms = pso
comm_ranges = 2.5
pm = true
sources = 0
repetitions = 6
base_seed = 3
""")

out = Path(tempfile.mkdtemp()) / "composition.csv"
outcome = run_sweep(config, out)
print(f"{outcome.executed} trials written to {out}")

records = read_records(out)
for k in range(7):
    rows = [r for r in records if r["k"] == k]
    wins = sum(r["success"] for r in rows)
    idle = sum(r["avg_idleness"] for r in rows) / len(rows)
    print(f"k={k} ({distribution_class(6, k).value:>10}): found {wins}/{len(rows)}, mean idleness {idle:6.1f} s")
