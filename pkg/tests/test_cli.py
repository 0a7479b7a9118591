import subprocess
import sys
from importlib import resources

import pytest

from hetpatrol.cli import main

DATA = resources.files("hetpatrol") / "data"


@pytest.fixture(scope="module")
def sig(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "open.sig"
    assert main(["signalmap", "--map", str(DATA / "open.map"), "--source", "4.1,4.1", "--out", str(out)]) == 0
    return out


def trial_args(sig, *extra):
    return ["trial", "--map", str(DATA / "open.map"), "--graph", str(DATA / "open.graph"), "--signal",
            str(sig), "--n", "4", "--alg", "pso", "--range", "2.5", "--pm", "true", "--duration", "700", *extra]


def test_signalmap_summary(sig, capsys):
    main(["signalmap", "--map", str(DATA / "open.map"), "--source", "4.1,4.1", "--out", str(sig)])
    out = capsys.readouterr().out
    assert "max_rssi=" in out and "cells_at_or_above_threshold=" in out
    header = sig.read_text().splitlines()[1].split()
    assert [float(v) for v in header[1:5]] == [20.0, 2.4e9, 4.0, -20.0]


def test_signalmap_on_wall(tmp_path, capsys):
    rc = main(["signalmap", "--map", str(DATA / "open.map"), "--source", "0.1,0.1", "--out",
               str(tmp_path / "x.sig")])
    assert rc == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and "error" in err[0]


def test_trial_k0(sig, capsys):
    assert main(trial_args(sig, "--k", "0", "--seed", "7")) == 0
    row = capsys.readouterr().out.strip().split(",")
    assert row[-1] == "false" and row[-2] == ""


def test_trial_repeatable_and_trace(sig, capsys):
    main(trial_args(sig, "--k", "2", "--seed", "7"))
    a = capsys.readouterr().out
    main(trial_args(sig, "--k", "2", "--seed", "7", "--trace"))
    cap = capsys.readouterr()
    assert a == cap.out
    lines = cap.err.splitlines()
    assert lines and all(ln.startswith("t=") and " agent=" in ln for ln in lines)


def test_bad_range(sig):
    with pytest.raises(SystemExit) as exc:
        main(trial_args(sig, "--k", "1", "--range", "far"))
    assert exc.value.code == 2


def test_missing_file(capsys):
    rc = main(["trial", "--map", "nope.map", "--graph", "x", "--signal", "y", "--n", "2", "--k", "0",
               "--alg", "pso", "--range", "global", "--pm", "true"])
    assert rc == 1


def test_sweep_and_analyze(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("map.open = 2\nalgorithms = pso\ncomm_ranges = global\npm = true\nsources = 1\n"
                   "repetitions = 2\nduration = 700\n")
    out = tmp_path / "r.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--resume"]) == 0
    assert "executed=0" in capsys.readouterr().out
    assert main(["analyze", "--records", str(out), "--out-dir", str(tmp_path / "an"), "--boot", "100"]) == 0
    assert capsys.readouterr().out.startswith("knee=")
    assert (tmp_path / "an" / "pareto.svg").exists()


def test_module_entry():
    r = subprocess.run([sys.executable, "-m", "hetpatrol", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "signalmap" in r.stdout
