"""Parameter-grid enumeration, deterministic seeding and a resumable sweep runner."""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Union

from .engine import GLOBAL, TrialConfig, TrialResult, World, run_trial
from .maps import load_world
from .search import Algorithm
from .signalmodel import SignalMap, SignalParams, load_or_build

log = logging.getLogger(__name__)

HEADER = ["map", "N", "k", "algorithm", "comm_range", "pm", "source", "rep", "seed",
          "t_appear", "avg_idleness", "ttf", "success"]
KEY_FIELDS = HEADER[:8]
PRESETS = ("desk", "full")


@dataclass(frozen=True)
class SweepConfig:
    """A Cartesian parameter grid.

    ``maps`` maps a map name to its list of team sizes. ``ks`` of None means
    every ``k`` in ``0..N``; otherwise only the listed values not above N.
    A ``None`` entry in ``comm_ranges`` is global range.
    """

    maps: dict[str, tuple[int, ...]]
    algorithms: tuple[Algorithm, ...] = tuple(Algorithm)
    comm_ranges: tuple[Optional[float], ...] = (1.5, 2.5, 4.0, 6.0, 8.0, GLOBAL)
    pm: tuple[bool, ...] = (True, False)
    sources: tuple[int, ...] = (0, 1, 2)
    repetitions: int = 15
    base_seed: int = 0
    ks: Optional[tuple[int, ...]] = None
    duration: int = 2000
    map_dir: Optional[str] = None
    cache_dir: Optional[str] = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")


@dataclass(frozen=True)
class TrialSpec:
    index: int
    key: tuple
    config: TrialConfig


def format_range(r: Optional[float]) -> str:
    return "global" if r is None else f"{r:.4f}"


def parse_range(text: str) -> Optional[float]:
    t = text.strip().lower()
    if t == "global":
        return GLOBAL
    v = float(t.rstrip("m"))
    if v < 0:
        raise ValueError("communication range must be non-negative")
    return v


def trial_seed(base_seed: int, key: tuple) -> int:
    """Stable 64-bit seed from the base seed and a trial key."""
    text = "|".join([str(base_seed)] + [str(v) for v in key])
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


def enumerate_trials(cfg: SweepConfig) -> list[TrialSpec]:
    """Full Cartesian product in canonical order, one seeded config per tuple."""
    specs = []
    idx = 0
    for map_name, ns in cfg.maps.items():
        for n in ns:
            ks = range(n + 1) if cfg.ks is None else [k for k in cfg.ks if 0 <= k <= n]
            for k, alg, rng, pm, src, rep in itertools.product(
                    ks, cfg.algorithms, cfg.comm_ranges, cfg.pm, cfg.sources, range(cfg.repetitions)):
                key = (map_name, n, k, alg.value, format_range(rng), _b(pm), src, rep)
                tc = TrialConfig(n_agents=n, n_searchers=k, algorithm=alg, comm_range=rng, pm=pm,
                                 seed=trial_seed(cfg.base_seed, key), map_id=map_name,
                                 source_id=src, duration=cfg.duration)
                specs.append(TrialSpec(idx, key, tc))
                idx += 1
    return specs


def _b(flag: bool) -> str:
    return "true" if flag else "false"


def record_row(key: tuple, seed: int, result: Optional[TrialResult]) -> list[str]:
    """One CSV row; a None result marks a failed trial."""
    row = [str(v) for v in key] + [str(seed)]
    if result is None:
        return row + ["", "", "", "error"]
    ttf = "" if result.ttf is None else str(result.ttf)
    return row + [str(result.t_appear), f"{result.avg_idleness:.4f}", ttf, _b(result.success)]


# --- config files ----------------------------------------------------------

def parse_sweep_config(text: str) -> SweepConfig:
    """Parse ``key = value`` lines; list values are comma separated.

    Keys: ``map.<name>`` (team sizes), ``k`` (``all`` or list), ``algorithms``,
    ``comm_ranges``, ``pm``, ``sources``, ``repetitions``, ``base_seed``,
    ``duration``, ``map_dir``, ``cache_dir``. Without ``base_seed`` the
    ``HETPATROL_SEED`` environment variable is used, else 0.
    """
    maps: dict[str, tuple[int, ...]] = {}
    kw: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        items = [v.strip() for v in value.split(",") if v.strip()]
        try:
            if key.startswith("map."):
                maps[key[4:]] = tuple(int(v) for v in items)
            elif key == "k":
                kw["ks"] = None if items == ["all"] else tuple(int(v) for v in items)
            elif key == "algorithms":
                kw["algorithms"] = tuple(Algorithm(v.lower().replace("-", "")) for v in items)
            elif key == "comm_ranges":
                kw["comm_ranges"] = tuple(parse_range(v) for v in items)
            elif key == "pm":
                kw["pm"] = tuple(_parse_bool(v) for v in items)
            elif key == "sources":
                kw["sources"] = tuple(int(v) for v in items)
            elif key in ("repetitions", "base_seed", "duration"):
                kw[key] = int(value)
            elif key in ("map_dir", "cache_dir"):
                kw[key] = value
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if not maps:
        raise ValueError("no map.<name> entries")
    if "base_seed" not in kw:
        kw["base_seed"] = int(os.environ.get("HETPATROL_SEED", "0"))
    return SweepConfig(maps=maps, **kw)


def _parse_bool(text: str) -> bool:
    t = text.lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def preset_text(name: str) -> str:
    return (resources.files("hetpatrol") / "data" / f"{name}.sweep").read_text()


def load_sweep_config(path_or_preset: Union[str, Path]) -> SweepConfig:
    """Read a config file, or a bundled preset (``desk``, ``full``) by name."""
    p = Path(path_or_preset)
    if not p.exists() and str(path_or_preset) in PRESETS:
        return parse_sweep_config(preset_text(str(path_or_preset)))
    return parse_sweep_config(p.read_text())


# --- running ----------------------------------------------------------------

_WORKER: dict = {}


def _init_worker(worlds, signal_maps) -> None:
    _WORKER["worlds"] = worlds
    _WORKER["signal_maps"] = signal_maps


def _run_one(spec: TrialSpec) -> list[str]:
    cfg = spec.config
    try:
        world = _WORKER["worlds"][cfg.map_id]
        sm = _WORKER["signal_maps"][(cfg.map_id, cfg.source_id)]
        result = run_trial(cfg, world, sm)
    except Exception as exc:  # a failing trial becomes an error row
        log.warning("trial %s failed: %s", spec.key, exc)
        result = None
    return record_row(spec.key, cfg.seed, result)


def prepare_inputs(cfg: SweepConfig, params: SignalParams = SignalParams()):
    """Load every referenced world and build (or read cached) signal maps."""
    worlds: dict[str, World] = {}
    sms: dict[tuple[str, int], SignalMap] = {}
    for name in cfg.maps:
        world, sources = load_world(name, cfg.map_dir)
        worlds[name] = world
        for s in cfg.sources:
            if not 0 <= s < len(sources):
                raise ValueError(f"map {name!r} has no source {s}")
            cache = Path(cfg.cache_dir) / f"{name}_src{s}.sig" if cfg.cache_dir else None
            sms[(name, s)] = load_or_build(world.grid, sources[s], params, cache)
    return worlds, sms


@dataclass
class SweepOutcome:
    rows: list[list[str]]
    executed: int
    skipped: int
    errors: int = 0


def checkpoint_path(out: Path) -> Path:
    return out.with_name(out.name + ".ckpt")


def _read_rows(path: Path, with_header: bool) -> list[list[str]]:
    """Rows from a CSV file, dropping a torn last line."""
    if not path.exists():
        return []
    text = path.read_text()
    lines = text.split("\n")
    if lines and lines[-1] != "":
        lines = lines[:-1]  # no trailing newline: the writer died mid-row
    rows = list(csv.reader(lines))
    if with_header and rows:
        if rows[0] != HEADER:
            raise ValueError(f"{path}: unexpected header {rows[0]}")
        rows = rows[1:]
    return [r for r in rows if len(r) == len(HEADER)]


def _row_key(row: list[str]) -> tuple:
    m, n, k, alg, rng, pm, src, rep = row[:8]
    return (m, int(n), int(k), alg, rng, pm, int(src), int(rep))


def rows_to_csv(rows: Iterable[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    w.writerows(rows)
    return buf.getvalue()


def run_sweep(cfg: SweepConfig, out: Union[str, Path], parallelism: int = 1, resume: bool = False,
              inputs=None) -> SweepOutcome:
    """Run every enumerated trial once and write the sorted CSV to ``out``.

    Finished rows are appended to ``<out>.ckpt`` as they complete; with
    ``resume`` the keys already in ``out`` or the checkpoint are skipped.
    Output order is the enumeration order, independent of ``parallelism``.
    """
    out = Path(out)
    ckpt = checkpoint_path(out)
    specs = enumerate_trials(cfg)
    done: dict[tuple, list[str]] = {}
    if resume:
        for row in _read_rows(out, True) + _read_rows(ckpt, False):
            done[_row_key(row)] = row
    wanted = {s.key for s in specs}
    done = {k: v for k, v in done.items() if k in wanted}
    todo = [s for s in specs if s.key not in done]
    log.info("sweep: %d trials, %d already done, %d to run", len(specs), len(done), len(todo))

    out.parent.mkdir(parents=True, exist_ok=True)
    # rewrite the checkpoint with only the surviving rows so torn lines vanish
    with open(ckpt, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerows(done.values())
    if todo:
        if inputs is None:
            inputs = prepare_inputs(cfg)
        worlds, sms = inputs
        with open(ckpt, "a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")

            def collect(row):
                done[_row_key(row)] = row
                w.writerow(row)
                fh.flush()

            if parallelism <= 1:
                _init_worker(worlds, sms)
                for spec in todo:
                    collect(_run_one(spec))
            else:
                with ProcessPoolExecutor(max_workers=parallelism, initializer=_init_worker,
                                         initargs=(worlds, sms)) as pool:
                    futures = [pool.submit(_run_one, s) for s in todo]
                    for fut in as_completed(futures):
                        collect(fut.result())

    rows = [done[s.key] for s in specs]
    tmp = out.with_name(out.name + ".tmp")
    tmp.write_text(rows_to_csv(rows))
    tmp.replace(out)
    ckpt.unlink(missing_ok=True)
    errors = sum(1 for r in rows if r[-1] == "error")
    return SweepOutcome(rows, executed=len(todo), skipped=len(specs) - len(todo), errors=errors)


def read_records(path: Union[str, Path]) -> list[dict]:
    """Parse a sweep CSV into dicts with typed fields; error rows are dropped."""
    text = Path(path).read_text()
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != HEADER:
        raise ValueError(f"unexpected header {reader.fieldnames}")
    out = []
    for row in reader:
        if row["success"] == "error":
            continue
        out.append({
            "map": row["map"],
            "N": int(row["N"]),
            "k": int(row["k"]),
            "algorithm": row["algorithm"],
            "comm_range": row["comm_range"],
            "pm": row["pm"] == "true",
            "source": int(row["source"]),
            "rep": int(row["rep"]),
            "seed": int(row["seed"]),
            "t_appear": int(row["t_appear"]),
            "avg_idleness": float(row["avg_idleness"]),
            "ttf": int(row["ttf"]) if row["ttf"] else None,
            "success": row["success"] == "true",
        })
    return out
