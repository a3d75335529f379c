import csv

import numpy as np
import pytest

from heliumgl.cli import run

SMALL = """
[grid]
nx = 16
lx = 1.6
[step]
dt = 1e-3
steps = 20
record_every = 10
[init]
phi = cosine mean=0.5 amplitude=0.2
theta = cosine mean=1.5 amplitude=0.1
[output]
dir = {out}
prefix = small
"""


def write(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text.format(out=tmp_path / "out"))
    return path


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_simulate_writes_outputs(tmp_path):
    assert run(["simulate", str(write(tmp_path, SMALL))]) == 0
    out = tmp_path / "out"
    rows = read_csv(out / "small.csv")
    assert rows[0][:3] == ["t", "E_total", "mass_total"] and len(rows) == 21
    assert (out / "small_snap000010.csv").exists() and (out / "small_snap000020.csv").exists()
    assert (out / "small_final.csv").exists()


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    text = SMALL.replace("cosine mean=0.5 amplitude=0.2", "random-smooth mean=0.5")
    for d in (a, b):
        assert run(["simulate", str(write(d, text))]) == 0
    for name in ("small.csv", "small_final.csv"):
        assert (a / "out" / name).read_bytes() == (b / "out" / name).read_bytes()


def test_unstable_run_exits_2(tmp_path, configs_dir, capsys):
    text = (configs_dir / "unstable.ini").read_text().replace("dir = out", f"dir = {tmp_path}")
    path = tmp_path / "u.ini"
    path.write_text(text)
    assert run(["simulate", str(path)]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_config_errors_exit_1(tmp_path, capsys):
    assert run(["simulate", str(tmp_path / "missing.ini")]) == 1
    assert run(["simulate", str(write(tmp_path, SMALL + "[params]\nbogus = 1\n"))]) == 1
    assert "bogus" in capsys.readouterr().err
    assert run(["simulate", str(write(tmp_path, SMALL + "[params]\ntau = -1\n"))]) == 1
    assert run(["frobnicate", "x.ini"]) == 1


def test_phase_diagram_slope(tmp_path, configs_dir):
    text = (configs_dir / "phase_lambda05.ini").read_text().replace("dir = out",
                                                                     f"dir = {tmp_path}")
    path = tmp_path / "pd.ini"
    path.write_text(text)
    assert run(["phase-diagram", str(path)]) == 0
    rows = np.array(read_csv(tmp_path / "lambda05_line.csv")[1:], dtype=float)
    ok = np.isfinite(rows[:, 1])
    slope = 1.0 / np.polyfit(rows[ok, 0], rows[ok, 1], 1)[0]
    assert slope == pytest.approx(-2.0, rel=0.02)
    assert len(read_csv(tmp_path / "lambda05_phase.csv")) == 1 + 200 * 50


def test_check_on_defaults_passes(tmp_path, capsys):
    assert run(["check", str(write(tmp_path, SMALL))]) == 0
    assert "all" in capsys.readouterr().out


def test_gauge_compare_writes_rows(tmp_path):
    text = SMALL.replace("steps = 20", "steps = 5")
    assert run(["gauge-compare", str(write(tmp_path, text))]) == 0
    rows = read_csv(tmp_path / "out" / "small_gauge.csv")
    assert rows[0][:3] == ["step", "t", "phi2"] and len(rows) == 6
