"""
Pareto front of idleness against time to find
=============================================

Run a small sweep, normalise both objectives, find the knee and check how
stable it is under bootstrap resampling.
"""

import tempfile
from pathlib import Path

from hetpatrol.experiments import parse_sweep_config, read_records, run_sweep
from hetpatrol.report import analyze, label_text, write_report

work = Path(tempfile.mkdtemp())
config = parse_sweep_config("""
map.cumberland = 6
k = 0, 2, 3, 5, 6
algorithms = pso, ecoli
comm_ranges = global
pm = true
sources = 0
repetitions = 4
base_seed = 5
""")
run_sweep(config, work / "records.csv")
records = read_records(work / "records.csv")
print(len(records), "trials")

report = analyze(records, resamples=2000, boot_seed=1)

# Medians per (algorithm, class, PM) label, both objectives scaled to [0, 1].
# All Patrol sits at the best-idleness, worst-TTF corner.
for label, (x, y) in report.medians.items():
    flag = " <- knee" if label == report.knee else (" front" if label in report.front else "")
    print(f"{label_text(label):>24}: idleness {x:.3f}, ttf {y:.3f}{flag}")

print("\nbootstrap knee frequency:")
for label, f in sorted(report.boot.knee_frequency.items(), key=lambda kv: -kv[1])[:4]:
    print(f"  {label_text(label):>24}: {f:.3f}")

write_report(report, work / "analysis")
print("\nwrote", sorted(p.name for p in (work / "analysis").iterdir()), "to", work / "analysis")
