import csv
import filecmp

import pytest

from hetpatrol.experiments import (
    HEADER, SweepConfig, checkpoint_path, enumerate_trials, format_range, load_sweep_config,
    parse_sweep_config, read_records, run_sweep, trial_seed,
)
from hetpatrol.search import Algorithm

TINY = """map.open = 2
k = 1, 2
algorithms = pso, ecoli
comm_ranges = 2.5, global
pm = true
sources = 1
repetitions = 2
base_seed = 11
duration = 700
"""


def test_full_grid_count():
    cfg = SweepConfig(maps={"open": (6,)})
    assert len(enumerate_trials(cfg)) == 7 * 3 * 6 * 2 * 3 * 15 == 11_340


def test_minimal_grid_count():
    cfg = SweepConfig(maps={"open": (6,)}, algorithms=(Algorithm.PSO,), comm_ranges=(None,), pm=(True,),
                      sources=(0,), repetitions=1)
    assert len(enumerate_trials(cfg)) == 7


def test_seeds_stable():
    cfg = SweepConfig(maps={"open": (4,)}, repetitions=2)
    a = [s.config.seed for s in enumerate_trials(cfg)]
    b = [s.config.seed for s in enumerate_trials(cfg)]
    assert a == b and len(set(a)) == len(a)
    assert trial_seed(1, ("x",)) != trial_seed(2, ("x",))


def test_presets():
    assert len(enumerate_trials(load_sweep_config("desk"))) == 1260
    assert len(enumerate_trials(load_sweep_config("full"))) == 87_480


def test_parse_errors():
    with pytest.raises(ValueError):
        parse_sweep_config("repetitions = 3\n")
    with pytest.raises(ValueError, match="line 2"):
        parse_sweep_config("map.open = 4\nbogus = 1\n")
    with pytest.raises(ValueError):
        parse_sweep_config("map.open = 4\nalgorithms = sa\n")


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("HETPATROL_SEED", "77")
    assert parse_sweep_config("map.open = 2\n").base_seed == 77


def test_format_range():
    assert format_range(None) == "global" and format_range(2.5) == "2.5000"


@pytest.fixture(scope="module")
def tiny_cfg():
    return parse_sweep_config(TINY)


@pytest.fixture(scope="module")
def tiny_run(tiny_cfg, tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep") / "a.csv"
    return out, run_sweep(tiny_cfg, out)


def test_output_shape(tiny_run, tiny_cfg):
    out, outcome = tiny_run
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == HEADER
    assert [tuple(r[:8]) for r in rows[1:]] == [tuple(str(v) for v in s.key) for s in enumerate_trials(tiny_cfg)]
    assert outcome.executed == len(rows) - 1 and outcome.errors == 0
    assert not checkpoint_path(out).exists()


def test_parallel_identical(tiny_run, tiny_cfg, tmp_path):
    out, _ = tiny_run
    other = tmp_path / "b.csv"
    run_sweep(tiny_cfg, other, parallelism=2)
    assert filecmp.cmp(out, other, shallow=False)


def test_resume_from_torn_checkpoint(tiny_run, tiny_cfg, tmp_path):
    out, _ = tiny_run
    lines = out.read_text().splitlines()
    target = tmp_path / "c.csv"
    checkpoint_path(target).write_text("\n".join(lines[1:6]) + "\n" + lines[6][:12])
    outcome = run_sweep(tiny_cfg, target, resume=True)
    assert outcome.skipped == 5 and outcome.executed == len(lines) - 1 - 5
    assert filecmp.cmp(out, target, shallow=False)


def test_resume_complete_is_noop(tiny_run, tiny_cfg):
    out, _ = tiny_run
    before = out.read_bytes()
    outcome = run_sweep(tiny_cfg, out, resume=True)
    assert outcome.executed == 0 and out.read_bytes() == before


def test_empty_grid(tmp_path):
    cfg = parse_sweep_config("map.open = 2\nk = 9\n")
    out = tmp_path / "e.csv"
    run_sweep(cfg, out)
    assert out.read_text() == ",".join(HEADER) + "\n"


def test_read_records(tiny_run):
    out, _ = tiny_run
    recs = read_records(out)
    assert recs[0]["N"] == 2 and isinstance(recs[0]["pm"], bool)
    assert all((r["ttf"] is None) == (not r["success"]) for r in recs)


def test_error_rows(tmp_path, tiny_cfg):
    out = tmp_path / "err.csv"
    run_sweep(tiny_cfg, out, inputs=({}, {}))
    rows = list(csv.reader(out.read_text().splitlines()))[1:]
    assert all(r[-1] == "error" for r in rows)
    assert read_records(out) == []
