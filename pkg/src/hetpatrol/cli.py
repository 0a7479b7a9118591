"""Command-line front end: signalmap, trial, sweep and analyze."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .engine import TrialConfig, World, run_trial
from .experiments import format_range, load_sweep_config, parse_range, record_row, run_sweep, trial_seed
from .search import Algorithm
from .signalmodel import SignalParams, build_signal_map, parse_signal_map
from .worldmap import Position, load_graph, load_map


def _position(text: str) -> Position:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y in metres, got {text!r}") from None
    return Position(x, y)


def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _range(text: str) -> Optional[float]:
    try:
        return parse_range(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a range in metres or 'global', got {text!r}") from None


def cmd_signalmap(args) -> int:
    grid = load_map(Path(args.map).read_text())
    params = SignalParams(args.tx, args.freq, args.wall, args.threshold, args.floor)
    if not grid.is_free_at(args.source):
        raise ValueError(f"source {tuple(args.source)} is not on a free cell")
    sm = build_signal_map(grid, args.source, params)
    text = sm.to_text()
    Path(args.out).write_text(text)
    sm = parse_signal_map(text, grid)
    vals = sm.rssi[~np.isnan(sm.rssi)]
    above = int((vals >= params.found_threshold).sum())
    print(f"max_rssi={vals.max():.4f} min_rssi={vals.min():.4f} cells_at_or_above_threshold={above}")
    return 0


def cmd_trial(args) -> int:
    grid = load_map(Path(args.map).read_text())
    graph = load_graph(Path(args.graph).read_text(), grid)
    sm = parse_signal_map(Path(args.signal).read_text(), grid)
    map_id = args.map_id or Path(args.map).stem
    cfg = TrialConfig(n_agents=args.n, n_searchers=args.k, algorithm=Algorithm(args.alg),
                      comm_range=args.range, pm=args.pm, seed=args.seed, map_id=map_id,
                      source_id=args.source_id, duration=args.duration)
    cfg.validate()
    trace: Optional[list] = [] if args.trace else None
    res = run_trial(cfg, World(grid, graph, map_id), sm, trace)
    if trace is not None:
        for line in trace:
            print(line, file=sys.stderr)
    key = (map_id, cfg.n_agents, cfg.n_searchers, cfg.algorithm.value, args.range_text,
           "true" if cfg.pm else "false", cfg.source_id, 0)
    print(",".join(record_row(key, cfg.seed, res)))
    return 0


def cmd_sweep(args) -> int:
    cfg = load_sweep_config(args.config)
    outcome = run_sweep(cfg, args.out, parallelism=args.parallel, resume=args.resume)
    print(f"trials={len(outcome.rows)} executed={outcome.executed} skipped={outcome.skipped} "
          f"errors={outcome.errors}")
    return 0


def cmd_analyze(args) -> int:
    from .report import analyze_file, label_text

    rep = analyze_file(args.records, args.out_dir, args.boot, args.boot_seed)
    print(f"knee={label_text(rep.knee)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hetpatrol", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("signalmap", help="precompute an RSSI raster for one source")
    s.add_argument("--map", required=True)
    s.add_argument("--source", required=True, type=_position, help="X,Y in metres")
    s.add_argument("--tx", type=float, default=20.0, help="transmit power, dBm")
    s.add_argument("--freq", type=float, default=2.4e9, help="carrier frequency, Hz")
    s.add_argument("--wall", type=float, default=4.0, help="loss per wall, dB")
    s.add_argument("--threshold", type=float, default=-20.0, help="found threshold, dBm")
    s.add_argument("--floor", type=float, default=-90.0, help="detection floor, dBm")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_signalmap)

    t = sub.add_parser("trial", help="run one trial and print its CSV row")
    t.add_argument("--map", required=True)
    t.add_argument("--graph", required=True)
    t.add_argument("--signal", required=True)
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--k", type=int, required=True)
    t.add_argument("--alg", choices=[a.value for a in Algorithm], required=True)
    t.add_argument("--range", type=_range, required=True, help="metres or 'global'")
    t.add_argument("--pm", type=_bool, required=True)
    t.add_argument("--seed", type=int, default=None,
                   help="trial seed; derived from the other arguments when omitted")
    t.add_argument("--duration", type=int, default=2000)
    t.add_argument("--map-id", default=None)
    t.add_argument("--source-id", type=int, default=0)
    t.add_argument("--trace", action="store_true", help="per-step event log on stderr")
    t.set_defaults(func=cmd_trial)

    w = sub.add_parser("sweep", help="run a parameter grid")
    w.add_argument("--config", required=True, help="config file or preset name (desk, full)")
    w.add_argument("--out", required=True)
    w.add_argument("--parallel", type=int, default=1)
    w.add_argument("--resume", action="store_true")
    w.set_defaults(func=cmd_sweep)

    a = sub.add_parser("analyze", help="Pareto, bootstrap and tests from sweep records")
    a.add_argument("--records", required=True)
    a.add_argument("--out-dir", required=True)
    a.add_argument("--boot", type=int, default=10_000)
    a.add_argument("--boot-seed", type=int, default=0)
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "trial":
        args.range_text = format_range(args.range)
        if args.seed is None:
            key = (args.map_id or Path(args.map).stem, args.n, args.k, args.alg, args.range_text,
                   "true" if args.pm else "false", args.source_id, 0)
            args.seed = trial_seed(0, key)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"hetpatrol {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
