"""Command-line entry point.

Subcommands ``simulate``, ``phase-diagram``, ``check`` and ``gauge-compare``
each take one configuration file (see :mod:`heliumgl.config`).  Exit codes:
0 success, 1 configuration error, 2 numerical failure, 3 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import checks
from .config import ConfigError, RunConfig, load
from .core import StateError, new_state, validate_params, write_snapshot
from .diagnostics import CSV_COLUMNS
from .dynamics import StepError, integrate
from .gauge import GaugeField, dual_run
from .gridops import PoissonError
from .phase_diagram import sweep

OK, CONFIG_ERROR, NUMERICAL_FAILURE, INVARIANT_VIOLATION = 0, 1, 2, 3


def _fmt(x) -> str:
    return repr(float(x))


def _initial_state(cfg: RunConfig):
    if cfg.snapshot:
        path = Path(cfg.snapshot)
        if not path.is_absolute() and cfg.source:
            path = Path(cfg.source).parent / path
        return new_state(cfg.grid, snapshot=path)
    return new_state(cfg.grid, cfg.init)


def _prepare(path):
    cfg = load(path)
    msgs = validate_params(cfg.params)
    if msgs:
        raise ConfigError(msgs)
    try:
        state = _initial_state(cfg)
    except (KeyError, ValueError, OSError) as exc:
        raise ConfigError([f"[init] {exc}"]) from exc
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg, state


def cmd_simulate(cfg: RunConfig, state) -> int:
    out = cfg.out_dir / f"{cfg.prefix}.csv"
    every = cfg.step.record_every
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)

        def record(i, s, rep):
            w.writerow([_fmt(v) for v in rep.row()])
            if every and (i + 1) % every == 0:
                write_snapshot(s, cfg.out_dir / f"{cfg.prefix}_snap{i + 1:06d}.csv")

        final, reps = integrate(state, cfg.step, cfg.params, callback=record)
    write_snapshot(final, cfg.out_dir / f"{cfg.prefix}_final.csv")
    warned = sum(bool(r.warnings) for r in reps)
    print(f"simulate: {len(reps)} steps to t={final.t:.6g}; diagnostics in {out}"
          + (f"; {warned} steps with warnings" if warned else ""))
    return OK


def cmd_phase_diagram(cfg: RunConfig, state=None) -> int:
    res = sweep(cfg.theta_axis, cfg.p_axis, cfg.params, cfg.vs2, cfg.vn2)
    with open(cfg.out_dir / f"{cfg.prefix}_phase.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "p", "phi_eq"])
        for j, p in enumerate(res.p):
            for i, th in enumerate(res.theta):
                w.writerow([_fmt(th), _fmt(p), _fmt(res.phi_eq[j, i])])
    with open(cfg.out_dir / f"{cfg.prefix}_line.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "theta_line"])
        for p, th in zip(res.p, res.theta_line):
            w.writerow([_fmt(p), _fmt(th)])
    desc = "vertical" if res.vertical else f"slope dp/dtheta = {res.slope:.6g}"
    print(f"phase-diagram: {desc}" + (f" ({res.message})" if res.message else ""))
    return OK


def cmd_check(cfg: RunConfig, state) -> int:
    results = checks.run_all(state, cfg.step, cfg.params)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"check: {len(failed)} violation(s): {', '.join(failed)}")
        return INVARIANT_VIOLATION
    print(f"check: all {len(results)} checks passed")
    return OK


def cmd_gauge_compare(cfg: RunConfig, state) -> int:
    steps = int(round((cfg.step.t_end - state.t) / cfg.step.dt))
    L = cfg.grid.extent[0]
    chis = [GaugeField.zero(), GaugeField.cosine(cfg.chi_amplitude, L / cfg.chi_mode)]
    _, rows = dual_run(state, chis, cfg.step, cfg.params, steps)
    cols = ["step", "t", "phi2", "v_s", "phi_s", "v_n", "rho", "theta", "p"]
    with open(cfg.out_dir / f"{cfg.prefix}_gauge.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow([row["step"]] + [_fmt(row[c]) for c in cols[1:]])
    worst = max(max(row[c] for c in cols[2:]) for row in rows) if rows else 0.0
    print(f"gauge-compare: {steps} steps, max observable discrepancy {worst:.3e}")
    return OK


COMMANDS = {"simulate": cmd_simulate, "phase-diagram": cmd_phase_diagram,
            "check": cmd_check, "gauge-compare": cmd_gauge_compare}


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="heliumgl", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", help="configuration file")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return CONFIG_ERROR if exc.code else OK
    try:
        cfg, state = _prepare(args.config)
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except (ConfigError, StateError) as exc:
        msgs = getattr(exc, "messages", [str(exc)])
        print("config error:\n  " + "\n  ".join(msgs), file=sys.stderr)
        return CONFIG_ERROR
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            return COMMANDS[args.command](cfg, state)
    except (StepError, StateError, PoissonError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        name = getattr(exc, "field_name", None)
        if name is not None:
            print(f"  field: {name}", file=sys.stderr)
        return NUMERICAL_FAILURE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
