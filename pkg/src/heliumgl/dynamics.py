"""Explicit time integration of the coupled phase/two-velocity/heat system.

Unknowns: order parameter ``phi``, superfluid velocity ``v_s`` with its
algebraic potential ``phi_s``, normal velocity ``v_n`` with pressure ``p``,
density ``rho`` and temperature ``theta``.  One step is the explicit
midpoint rule; every stage evaluates all right-hand sides from the same
stage state (``phi_s`` solve, tilt ``m``, phase rate, ``v_s`` rate,
``v_n`` predictor plus pressure projection, continuity, temperature).

Overdots are material derivatives ``d/dt = d_t + v_n . grad`` by default;
``material_derivative="partial"`` drops the transport terms.

The normal-velocity divergence constraint ``div v_n = lam rho phi phidot``
cannot hold with nonzero mean under no-slip walls (the divergence of a
no-slip field integrates to zero).  The projection enforces its zero-mean
part and reports the mean as ``compat_defect``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import gridops as go
from .core import FieldState, ModelParams, StateError
from .gridops import EVEN, NOSLIP, SLIP, ext, trim


class StepError(RuntimeError):
    """A step could not be completed; carries the offending field name."""

    def __init__(self, msg, field_name=None, step_index=None, residual=None):
        self.field_name = field_name
        self.step_index = step_index
        self.residual = residual
        where = f" at step {step_index}" if step_index is not None else ""
        super().__init__(f"{msg}{where}")


@dataclass
class StepConfig:
    dt: float
    t_end: float = 0.0
    projection_tol: float = 1e-8
    material_derivative: str = "advective"
    record_every: int = 0
    pinned: frozenset = frozenset()
    eps_mass: float = 1e-8
    tol_phase: float = 1e-6
    diagnostics: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.projection_tol > 0:
            raise ValueError("projection_tol must be positive")
        if self.material_derivative not in ("advective", "partial"):
            raise ValueError("material_derivative is 'advective' or 'partial'")
        self.pinned = frozenset(self.pinned)

    @property
    def advective(self) -> bool:
        return self.material_derivative == "advective"


@dataclass
class Rates:
    """Everything one stage evaluation produces.

    ``tend`` holds partial time derivatives of the explicitly integrated
    fields; ``vn_acc`` is the partial acceleration of ``v_n`` without the
    pressure gradient.  The material rates are kept for the temperature
    equation, the diagnostics and the entropy production.
    """

    tend: dict
    vn_acc: np.ndarray
    coef: np.ndarray
    target: np.ndarray
    phi_s: np.ndarray
    m: np.ndarray
    phi_dot: np.ndarray
    vs_dot: np.ndarray
    W: np.ndarray
    div_vn: np.ndarray
    grad_theta: np.ndarray
    extra: dict = field(default_factory=dict)
    p_stage: np.ndarray | None = None
    helm: np.ndarray | None = None          # -d(target)/dp, i.e. lambda^2 rho phi^2 / tau
    phase_key: str = "phi"
    dphase_dp: np.ndarray | None = None     # d(phase rate)/dp
    weight: np.ndarray | None = None        # phi, or psi for the complex form
    dissip_fn: object = None                # phase rate -> phase dissipation
    heat: tuple | None = None               # (rho theta, 1 / (rho c0))

    def corrected(self, p_new):
        """Rates with the pressure-dependent phase terms re-evaluated at ``p_new``.

        Only the phase rate and the quantities built from it (constraint
        target, heating) depend on ``p``, and the dependence of the phase
        rate is affine, so the update is exact.
        """
        if self.dphase_dp is None:
            return self
        dphase = self.dphase_dp * (p_new - self.p_stage)
        phase_dot = self.phi_dot + dphase
        d_pp = np.real(np.conj(self.weight) * dphase)
        rt, inv = self.heat
        d_theta = (rt * d_pp + self.dissip_fn(phase_dot) - self.dissip_fn(self.phi_dot)) * inv
        tend = dict(self.tend)
        tend[self.phase_key] = tend[self.phase_key] + dphase
        tend["theta"] = tend["theta"] + d_theta
        extra = dict(self.extra)
        if "theta_dot" in extra:
            extra["theta_dot"] = extra["theta_dot"] + d_theta
        return dataclasses.replace(self, tend=tend, phi_dot=phase_dot,
                                   target=self.target - self.helm * (p_new - self.p_stage),
                                   extra=extra, dphase_dp=None)


# ------------------------------------------------------------------ pieces

def tilt_m(theta, p, v_s, v_n, params: ModelParams):
    """``m = theta + lam p + |v_s|^2 - |v_n|^2``."""
    return (theta + params.lam * p + np.sum(np.square(v_s), axis=0)
            - np.sum(np.square(v_n), axis=0))


def phase_rhs(state: FieldState, m, params: ModelParams):
    """Material rate of ``phi`` from the Ginzburg-Landau balance."""
    g = state.grid
    rho, phi = state.rho, state.phi
    lapr = go.div_coeff_grad(rho, phi, g)
    num = (lapr / params.kappa**2 - rho * params.theta_lambda * phi * (phi * phi - 1.0)
           - rho * m * phi)
    return num / (params.tau * rho)


def solve_phi_s(state: FieldState, params: ModelParams):
    """``phi_s = -div(rho phi^2 v_s) / (tau kappa^2 (rho phi^2 + eps))``."""
    g = state.grid
    phiE = ext(state.phi, g, EVEN)
    rhoE = ext(state.rho, g, EVEN)
    vsE = ext(state.v_s, g, SLIP, omega=params.omega_bc)
    d = go.div_e(rhoE * phiE**2 * vsE, g)
    q = state.rho * state.phi**2 + params.eps_reg
    return -d / (params.tau * params.kappa**2 * q)


def vs_rhs(state: FieldState, params: ModelParams, phi_s=None):
    """Material rate ``-grad phi_s - curl v_n - rho phi^2 v_s + grad theta``."""
    g = state.grid
    if phi_s is None:
        phi_s = solve_phi_s(state, params)
    out = (-go.grad(phi_s, g) - go.curl(state.v_n, g, NOSLIP)
           - state.rho * state.phi**2 * state.v_s + go.grad(state.theta, g))
    if g.dim == 1:
        out[1:] = 0.0
    return out


def continuity_rate(state: FieldState, params: ModelParams):
    """Material rate ``-rho div((1 - phi^2) v_n + phi^2 v_s)``."""
    g = state.grid
    phiE = ext(state.phi, g)
    v = (1 - phiE**2) * ext(state.v_n, g, NOSLIP) + phiE**2 * ext(
        state.v_s, g, SLIP, omega=params.omega_bc)
    return -state.rho * go.div_e(v, g)


def temperature_rhs(state: FieldState, phi_dot, vs_dot, params: ModelParams, phi_s=None):
    """Material rate of ``theta`` from the heat balance, divided by ``rho c0``."""
    g = state.grid
    if phi_s is None:
        phi_s = solve_phi_s(state, params)
    rho, phi, th = state.rho, state.phi, state.theta
    W = vs_dot + go.grad(phi_s, g) - go.grad(th, g)
    thE = ext(th, g)
    phiE, rhoE = ext(phi, g), ext(rho, g)
    flux = rhoE * phiE**2 * (ext(state.v_s, g, SLIP, omega=params.omega_bc)
                             - ext(state.v_n, g, NOSLIP))
    dv = go.div(state.v_n, g, NOSLIP)
    rhs = (rho * th * phi * phi_dot + params.tau * rho * phi_dot**2 + np.sum(W * W, axis=0)
           + params.nu * dv**2
           + params.tau * params.kappa**2 * rho * phi**2 * phi_s**2
           + go.div_coeff_grad_e(params.k0(thE), thE, g)
           + go.div_e(flux, g) * th + rho * params.heat_supply(g))
    return rhs / (rho * params.c0)


# ------------------------------------------------------------ stage kernel

def shared_rates(grid, params: ModelParams, cfg: StepConfig, *, rhoE2, thE2, vnE2, p,
                 phi2E1, JE1, TE1, phi_phidot, dissip):
    """Right-hand sides that depend on the order parameter only through
    gauge-invariant combinations.

    ``phi2E1`` is ``phi^2``, ``JE1`` the superfluid current ``phi^2 v_s``
    and ``TE1`` the tensor ``grad phi (x) grad phi``, each extended by one
    ghost layer.  ``phi_phidot`` and ``dissip`` (``tau rho phidot^2 +
    tau kappa^2 rho phi^2 phi_s^2``) are interior arrays.  Shared by the
    real and the gauge-transformed steppers so both discretise these terms
    identically.
    """
    g = grid
    kap2 = params.kappa**2
    rhoE1, thE1, vnE1 = trim(rhoE2, g), trim(thE2, g), trim(vnE2, g)
    rho, th, vn = trim(rhoE1, g), trim(thE1, g), trim(vnE1, g)
    phi2, J = trim(phi2E1, g), trim(JE1, g)

    curl_vn = go.curl_e(vnE1, g)
    W = -curl_vn - rho * J
    grad_th = go.grad_e(thE1, g)
    div_vn = go.div_e(vnE1, g)

    force = (-go.curl_e(go.curl_e(vnE2, g), g)
             + params.nu * go.grad_e(go.div_e(vnE2, g), g)
             - go.div_tensor_e(TE1, g) / kap2
             - rho * phi2 * grad_th
             - go.curl_e(rhoE1 * JE1, g)
             + rho * params.body_force(g))
    mass = rho * (1.0 - phi2)
    if float(np.min(mass)) < cfg.eps_mass:
        raise StepError("rho (1 - phi^2) below eps_mass", field_name="v_n")
    coef = 1.0 / mass
    vn_acc = force * coef

    v_tot = (1.0 - phi2E1) * vnE1 + JE1
    rho_dot = -rho * go.div_e(v_tot, g)

    heat = (rho * th * phi_phidot + dissip + np.sum(W * W, axis=0)
            + params.nu * div_vn**2
            + go.div_coeff_grad_e(params.k0(thE1), thE1, g)
            + go.div_e(rhoE1 * (JE1 - phi2E1 * vnE1), g) * th
            + rho * params.heat_supply(g))
    theta_dot = heat / (rho * params.c0)
    target = params.lam * rho * phi_phidot

    if cfg.advective:
        vn_acc = vn_acc - go.advect_e(vn, vnE1, g)
        rho_t = rho_dot - go.advect_e(vn, rhoE1, g)
        theta_t = theta_dot - go.advect_e(vn, thE1, g)
    else:
        rho_t, theta_t = rho_dot, theta_dot
    if g.dim == 1:
        vn_acc[1:] = 0.0
    return dict(W=W, grad_theta=grad_th, div_vn=div_vn, coef=coef, vn_acc=vn_acc,
                target=target, rho_dot=rho_dot, theta_dot=theta_dot,
                rho_t=rho_t, theta_t=theta_t)


def evaluate(state: FieldState, params: ModelParams, cfg: StepConfig) -> Rates:
    """One stage evaluation of the real formulation."""
    g = state.grid
    kap2 = params.kappa**2
    phiE2 = ext(state.phi, g, EVEN, 2)
    rhoE2 = ext(state.rho, g, EVEN, 2)
    thE2 = ext(state.theta, g, EVEN, 2)
    vnE2 = ext(state.v_n, g, NOSLIP, 2)
    vsE1 = ext(state.v_s, g, SLIP, 1, omega=params.omega_bc)
    phiE1, rhoE1 = trim(phiE2, g), trim(rhoE2, g)
    rho, phi, th, vs, vn = state.rho, state.phi, state.theta, state.v_s, state.v_n

    phi2E1 = phiE1 * phiE1
    JE1 = phi2E1 * vsE1
    phi_s = -go.div_e(rhoE1 * JE1, g) / (params.tau * kap2 * (rho * phi * phi + params.eps_reg))
    m = tilt_m(th, state.p, vs, vn, params)

    phi_dot = (go.div_coeff_grad_e(rhoE1, phiE1, g) / kap2
               - rho * params.theta_lambda * phi * (phi * phi - 1.0)
               - rho * m * phi) / (params.tau * rho)

    gphiE1 = go.grad_e(phiE2, g)
    TE1 = gphiE1[:, None] * gphiE1[None, :]
    dissip = params.tau * rho * phi_dot**2 + params.tau * kap2 * rho * phi**2 * phi_s**2
    sh = shared_rates(g, params, cfg, rhoE2=rhoE2, thE2=thE2, vnE2=vnE2, p=state.p,
                      phi2E1=phi2E1, JE1=JE1, TE1=TE1, phi_phidot=phi * phi_dot,
                      dissip=dissip)

    grad_phis = go.grad(phi_s, g)
    vs_dot = sh["W"] - grad_phis + sh["grad_theta"]
    if g.dim == 1:
        vs_dot[1:] = 0.0
    if cfg.advective:
        phi_t = phi_dot - np.einsum("i...,i...->...", vn, trim(gphiE1, g))
        vs_t = vs_dot - go.advect_e(vn, vsE1, g)
    else:
        phi_t, vs_t = phi_dot, vs_dot
    tend = {"phi": phi_t, "v_s": vs_t, "rho": sh["rho_t"], "theta": sh["theta_t"]}
    return Rates(tend=tend, vn_acc=sh["vn_acc"], coef=sh["coef"], target=sh["target"],
                 phi_s=phi_s, m=m, phi_dot=phi_dot, vs_dot=vs_dot, W=sh["W"],
                 div_vn=sh["div_vn"], grad_theta=sh["grad_theta"],
                 extra={"rho_dot": sh["rho_dot"], "theta_dot": sh["theta_dot"]},
                 **pressure_response(params, rho, th, phi, state.p, "phi",
                                     lambda pd: params.tau * rho * pd**2))


def pressure_response(params: ModelParams, rho, theta, weight, p, key, dissip_fn):
    """Fields describing how a stage's phase rate responds to ``p``.

    The tilt contributes ``-lambda p weight / tau`` to the phase rate, with
    ``weight`` either ``phi`` or ``psi``.
    """
    lt = params.lam / params.tau
    return dict(p_stage=p, helm=params.lam * lt * rho * np.abs(weight) ** 2,
                phase_key=key, dphase_dp=-lt * weight, weight=weight,
                dissip_fn=dissip_fn, heat=(rho * theta, 1.0 / (rho * params.c0)))


# -------------------------------------------------------------- projection

def project(v_star, coef, target, grid, h, tol, helm=None, p_stage=None):
    """Pressure projection of a predicted normal velocity.

    Finds ``p`` with ``div(v_star - h coef grad p) = target - helm (p - p_stage)``,
    where ``helm >= 0`` is the response of the constraint target to the
    pressure.  When ``helm`` vanishes identically the problem is the usual
    pure-Neumann one: ``p`` is mean-pinned and the mean of ``target`` is
    removed.  Otherwise the system is nonsingular and the mean of ``p`` is
    whatever makes the constraint solvable.  Returns
    ``(v_n, p, residual, compat_defect)``; ``residual`` is the max-norm
    error of the constraint actually imposed.
    """
    if helm is not None and np.any(helm > 0):
        t0 = target + helm * p_stage
        rhs = go.div(v_star, grid, NOSLIP) - t0
        p = go.solve_helmholtz(h, coef, helm, rhs, grid, tol=1e-12)
        v_n = v_star - h * coef * go.grad(p, grid, EVEN)
        if grid.dim == 1:
            v_n[1:] = 0.0
        res = go.div(v_n, grid, NOSLIP) - (t0 - helm * p)
        return v_n, p, float(np.max(np.abs(res))), 0.0
    rhs = (go.div(v_star, grid, NOSLIP) - target) / h
    p, mean_rhs = go.solve_projection(coef, rhs, grid, tol=1e-12)
    v_n = v_star - h * coef * go.grad(p, grid, EVEN)
    if grid.dim == 1:
        v_n[1:] = 0.0
    compat = -mean_rhs * h
    res = go.div(v_n, grid, NOSLIP) - (target - float(np.mean(target)))
    return v_n, p, float(np.max(np.abs(res))), compat


def vn_step(state: FieldState, rates: Rates, dt: float, cfg: StepConfig):
    """Explicit ``v_n`` update over ``dt`` from ``state`` followed by projection.

    Returns ``(v_n, p, residual, compat_defect)``.
    """
    g = state.grid
    v_star = state.v_n + dt * rates.vn_acc
    implicit = "p" not in cfg.pinned
    v_n, p, res, compat = project(v_star, rates.coef, rates.target, g, dt, cfg.projection_tol,
                                  helm=rates.helm if implicit else None,
                                  p_stage=rates.p_stage)
    if res > cfg.projection_tol:
        raise StepError("projection residual above tolerance", field_name="p", residual=res)
    return v_n, p, res, compat


def continuity_step(state: FieldState, rates: Rates, dt: float):
    rho = state.rho + dt * rates.tend["rho"]
    if not np.all(rho > 0):
        raise StepError("rho nonpositive", field_name="rho")
    return rho


# ----------------------------------------------------------------- stepping

def advance(base, rates: Rates, h: float, cfg: StepConfig):
    """Return ``base`` advanced by ``h`` with stage rates ``rates``.

    Works for both formulations: ``rates.tend`` names the integrated fields
    of whichever state type ``base`` is.  The projection runs first; the
    pressure it returns is fed back into the phase and heating rates before
    the explicit updates (see :meth:`Rates.corrected`).  ``info["rates"]``
    holds the rates actually applied.  The constraint is imposed implicitly
    at the end of each stage, which is first order in ``dt`` whenever
    ``lam phi`` is nonzero.
    """
    new = {}
    info = {"constraint_residual": 0.0, "compat_defect": 0.0}
    if "v_n" not in cfg.pinned:
        v_n, p, res, compat = vn_step(base, rates, h, cfg)
        new["v_n"] = v_n
        if "p" not in cfg.pinned:
            new["p"] = p
            rates = rates.corrected(p)
        info["constraint_residual"] = res
        info["compat_defect"] = compat
    info["rates"] = rates
    for name, d in rates.tend.items():
        if name in cfg.pinned:
            continue
        new[name] = getattr(base, name) + h * d
    for name in ("rho", "theta"):
        if name in new:
            a = new[name]
            if not np.all(np.isfinite(a)):
                raise StepError(f"{name} not finite", field_name=name)
            if not np.all(a > 0):
                raise StepError(f"{name} nonpositive", field_name=name)
    for name, a in new.items():
        if not np.all(np.isfinite(a)):
            raise StepError(f"{name} not finite", field_name=name)
    return dataclasses.replace(base, t=base.t + h, **new), info


def step(state: FieldState, cfg: StepConfig, params: ModelParams, prev_reports=None):
    """Advance one explicit midpoint step.

    Returns ``(new_state, report)``; ``report`` is a
    :class:`heliumgl.diagnostics.DiagnosticsReport`.
    """
    from . import diagnostics

    dt = cfg.dt
    r1 = evaluate(state, params, cfg)
    mid, _ = advance(state, r1, 0.5 * dt, cfg)
    mid = mid.replace(phi_s=r1.phi_s)
    r2 = evaluate(mid, params, cfg)
    new, info = advance(state, r2, dt, cfg)
    new = new.replace(t=state.t + dt)
    new = new.replace(phi_s=solve_phi_s(new, params))
    report = diagnostics.step_report(state, new, mid, info["rates"], info, cfg, params)
    return new, report


def make_consistent(state, params: ModelParams, cfg: StepConfig, evaluator=None):
    """Project ``v_n`` so the initial state satisfies the divergence constraint.

    Without this an inconsistent initial ``v_n`` is corrected within the
    first step and the projection pressure is of order ``1/dt``; since
    ``p`` enters the tilt ``m`` that transient would swamp the phase
    dynamics.  ``p`` itself is left unchanged.
    """
    if "v_n" in cfg.pinned:
        return state
    rates = (evaluator or evaluate)(state, params, cfg)
    v_n, _, _, _ = project(state.v_n, rates.coef, rates.target, state.grid, 1.0,
                           cfg.projection_tol)
    return state.replace(v_n=v_n)


def integrate(state: FieldState, cfg: StepConfig, params: ModelParams, callback=None,
              consistent_start: bool = True):
    """Step from ``state.t`` to ``cfg.t_end``; returns ``(state, reports)``.

    ``callback(i, state, report)`` runs after every step; snapshots are the
    caller's business (see ``record_every``).  The initial ``v_n`` is made
    consistent with the constraint first unless ``consistent_start`` is off.
    """
    if consistent_start:
        state = make_consistent(state, params, cfg)
    n = int(round((cfg.t_end - state.t) / cfg.dt))
    reports = []
    for i in range(n):
        try:
            state, rep = step(state, cfg, params)
        except (StepError, StateError, go.PoissonError) as exc:
            name = getattr(exc, "field_name", None)
            raise StepError(str(exc), field_name=name, step_index=i) from exc
        reports.append(rep)
        if callback is not None:
            callback(i, state, rep)
    return state, reports


__all__ = ["StepConfig", "StepError", "Rates", "tilt_m", "phase_rhs", "solve_phi_s",
           "vs_rhs", "continuity_rate", "temperature_rhs", "evaluate", "project",
           "vn_step", "continuity_step", "advance", "step", "integrate"]
