"""Invariant suite behind the ``check`` subcommand.

Every check returns a :class:`CheckResult`; a run passes when all of them
do.  The checks use manufactured fields or short runs of the configured
problem, so they are cheap enough to run before a long simulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import gridops as go
from .core import Grid, ModelParams, new_state, validate_params
from .dynamics import StepConfig, StepError, integrate
from .thermo import latent_heat, potential_w, stationary_phase


@dataclass
class CheckResult:
    name: str
    value: float
    tol: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.value:.3e} (tol {self.tol:.1e}) {self.detail}".rstrip()


def _res(name, value, tol, detail="", upper=True):
    ok = bool(np.isfinite(value) and (value <= tol if upper else value >= tol))
    return CheckResult(name, float(value), tol, ok, detail)


# ------------------------------------------------------------------ operators

def _trig_fields(grid):
    X, Y = grid.coords()
    lx, ly = grid.extent
    f = np.cos(np.pi * X / lx) * (np.cos(np.pi * Y / ly) if grid.dim == 2 else 1.0)
    return X, Y, lx, ly, f


def div_curl_check(n: int = 32) -> CheckResult:
    g = Grid.slab(n, n, 1.0, 1.0)
    X, Y = g.coords()
    v = np.stack([np.sin(3 * X) * np.cos(2 * Y), np.exp(X) * Y**2, np.cos(X + Y)])
    # curl needs a one-cell ring of valid data; div of it only at interior cells
    c = go.curl_e(go.ext(v, g, go.ODD), g)
    d = go.div_e(go.ext(c, g, go.ODD), g)
    err = float(np.max(np.abs(d[1:-1, 1:-1])))
    return _res("div(curl v)", err, 1e-12)


def _errors(n):
    g = Grid.line(n, 1.0)
    X, _ = g.coords()
    k = np.pi
    f = np.cos(k * X)
    v = np.zeros((3, n))
    v[0] = np.sin(k * X)
    interior = slice(2, -2)
    eg = np.max(np.abs(go.grad(f, g)[0] + k * np.sin(k * X))[interior])
    ed = np.max(np.abs(go.div(v, g, go.ODD) - k * np.cos(k * X))[interior])
    el = np.max(np.abs(go.lap(f, g) + k * k * f))
    return np.array([eg, ed, el])


def convergence_check(n0: int = 32) -> list[CheckResult]:
    e1, e2 = _errors(n0), _errors(2 * n0)
    out = []
    for name, r in zip(("grad", "div", "lap"), e1 / e2):
        out.append(CheckResult(f"{name} convergence ratio", float(r), 0.5,
                               bool(abs(r - 4.0) <= 0.5), "expected 4"))
    return out


def sbp_check(n: int = 24) -> CheckResult:
    g = Grid.slab(n, n + 3, 1.3, 0.9)
    X, Y = g.coords()
    f = np.exp(-X) * np.cos(2 * Y) + X * Y
    v = np.stack([np.sin(X + 2 * Y), X**2 - Y, np.cos(X * Y)])
    lhs = g.integrate(f * go.div(v, g, go.SLIP, omega=(0.3, -0.2, 0.0))
                      + np.sum(go.grad(f, g) * v, axis=0))
    rhs = go.boundary_flux(f, v, g, omega=(0.3, -0.2, 0.0))
    return _res("summation by parts", abs(lhs - rhs), 1e-10)


# --------------------------------------------------------------------- thermo

def golden_oracle(m, params: ModelParams) -> float:
    """Minimiser of the phase potential over ``phi >= 0`` by bounded golden-section search."""
    res = minimize_scalar(lambda x: float(potential_w(x, m, params).W), bracket=None,
                          bounds=(0.0, 1.5), method="bounded",
                          options={"xatol": 1e-12})
    x = res.x
    return 0.0 if potential_w(0.0, m, params).W <= potential_w(x, m, params).W else x


def thermo_checks(params: ModelParams) -> list[CheckResult]:
    ms = np.linspace(0.0, 2 * params.theta_lambda, 200)
    err = max(abs(stationary_phase(m, params) - golden_oracle(m, params)) for m in ms)
    out = [_res("stationary phase vs minimiser", err, 1e-6)]
    out.append(_res("latent heat", abs(latent_heat(params)), 0.0))
    msgs = validate_params(params)
    out.append(CheckResult("parameter signs", float(len(msgs)), 0.0, not msgs, "; ".join(msgs)))
    return out


# ----------------------------------------------------------------- evolution

def evolution_checks(state, cfg: StepConfig, params: ModelParams,
                     max_steps: int = 200) -> list[CheckResult]:
    """Short run of the configured problem: Clausius-Duhem, constraint and
    boundary audit.  Raises :class:`StepError` on numerical failure."""
    steps = min(max_steps, max(1, int(round((cfg.t_end - state.t) / cfg.dt))))
    run_cfg = StepConfig(**{**cfg.__dict__, "t_end": state.t + steps * cfg.dt})
    _, reps = integrate(state, run_cfg, params)
    scale = max(max(float(np.max(np.abs(r.sigma))) for r in reps), 1.0)
    smin = min(r.entropy_production_min for r in reps)
    out = [_res("entropy production min", smin, -1e-12 * scale, f"{steps} steps",
                upper=False)]
    out.append(_res("constraint residual", max(r.constraint_residual for r in reps),
                    cfg.projection_tol))
    if cfg.diagnostics:
        escale = max(1.0, max(abs(r.E_total) for r in reps))
        out.append(_res("external phase power", max(abs(r.P_e_phi) for r in reps),
                        1e-9 * escale))
        flux = max(abs(r.flux_q) + abs(r.flux_phase) + abs(r.flux_pvn) for r in reps)
        out.append(_res("boundary flux", flux, 1e-9 * escale))
    return out


def run_all(state, cfg: StepConfig, params: ModelParams, max_steps: int = 200):
    results = [div_curl_check(), *convergence_check(), sbp_check(), *thermo_checks(params)]
    try:
        results += evolution_checks(state, cfg, params, max_steps)
    except StepError:
        raise
    return results


def default_state(grid: Grid):
    return new_state(grid, {"phi": {"profile": "cosine", "mean": 0.5, "amplitude": 0.2},
                            "theta": {"profile": "cosine", "mean": 1.5, "amplitude": 0.1}})
