"""Complex (gauge-transformed) formulation.

The map between the real unknowns and ``(psi, A, phi_pot)`` is

    psi = phi exp(i chi),  A = v_s + grad(chi)/kappa,
    phi_pot = phi_s - chidot/kappa,

with ``chidot`` the material rate of ``chi``.  The supercurrent
``J = phi^2 v_s = |psi|^2 A - Im(conj(psi) grad psi)/kappa`` and every
other quantity entering the v_n, rho and theta equations is gauge
invariant, so :func:`complex_step` reuses the real stepper's shared kernel.

``phi_pot`` has no evolution equation of its own.  It is fixed by the
superfluid-pressure balance written in invariant form,
``phi_s = -div(rho J) / (tau kappa^2 (rho |psi|^2 + eps))``, shifted by the
gauge rate.  With that choice the phase of ``psi`` follows ``chi``.

Under the material derivative the identity
``vdot_s + grad phi_s = Adot + grad phi_pot`` picks up
``(grad v_n)^T grad(chi) / kappa``; the A-equation carries that term.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import gridops as go
from .core import ComplexState, FieldState, ModelParams
from .dynamics import Rates, StepConfig, advance, pressure_response, shared_rates
from .gridops import EVEN, NOSLIP, SLIP, ext, trim


@dataclass(frozen=True)
class GaugeField:
    """Analytic gauge function ``chi(x, y, t)`` with its gradient and time rate.

    ``value``, ``grad`` and ``rate`` take cell-centre coordinate arrays and
    a time; ``grad`` returns three components.
    """

    value: Callable
    grad: Callable
    rate: Callable

    @classmethod
    def zero(cls) -> "GaugeField":
        z = lambda X, Y, t: np.zeros_like(X)  # noqa: E731
        return cls(z, lambda X, Y, t: np.zeros((3,) + X.shape), z)

    @classmethod
    def constant(cls, c: float) -> "GaugeField":
        return cls(lambda X, Y, t: np.full_like(X, c),
                   lambda X, Y, t: np.zeros((3,) + X.shape),
                   lambda X, Y, t: np.zeros_like(X))

    @classmethod
    def cosine(cls, amplitude: float, length: float, omega_t: float = 0.0) -> "GaugeField":
        """``amplitude cos(2 pi x / length) + omega_t t``."""
        k = 2 * np.pi / length

        def grad(X, Y, t):
            g = np.zeros((3,) + X.shape)
            g[0] = -amplitude * k * np.sin(k * X)
            return g

        return cls(lambda X, Y, t: amplitude * np.cos(k * X) + omega_t * t, grad,
                   lambda X, Y, t: np.full_like(X, omega_t))

    def sample(self, grid, t):
        X, Y = grid.coords()
        return self.value(X, Y, t), self.grad(X, Y, t), self.rate(X, Y, t)

    def material_rate(self, grid, t, v_n, advective=True):
        X, Y = grid.coords()
        r = self.rate(X, Y, t)
        if advective:
            r = r + np.einsum("i...,i...->...", v_n, self.grad(X, Y, t))
        return r


def _chi(chi):
    return GaugeField.zero() if chi is None else chi


def gauge_forward(real: FieldState, chi: GaugeField, params: ModelParams,
                  material_derivative: str = "advective") -> ComplexState:
    g = real.grid
    val, grad_chi, _ = chi.sample(g, real.t)
    chidot = chi.material_rate(g, real.t, real.v_n, material_derivative == "advective")
    k = params.kappa
    return ComplexState(grid=g, psi=real.phi * np.exp(1j * val), A=real.v_s + grad_chi / k,
                        phi_pot=real.phi_s - chidot / k, v_n=real.v_n.copy(),
                        p=real.p.copy(), rho=real.rho.copy(), theta=real.theta.copy(),
                        chi=chi, t=real.t)


def gauge_backward(cplx: ComplexState, chi: GaugeField | None, params: ModelParams,
                   material_derivative: str = "advective") -> FieldState:
    """Exact inverse of :func:`gauge_forward`; ``phi`` is the real part of
    ``psi exp(-i chi)`` (the imaginary part is zero up to roundoff for
    states produced by the forward map)."""
    chi = _chi(chi if chi is not None else cplx.chi)
    g = cplx.grid
    val, grad_chi, _ = chi.sample(g, cplx.t)
    chidot = chi.material_rate(g, cplx.t, cplx.v_n, material_derivative == "advective")
    k = params.kappa
    return FieldState(grid=g, phi=np.real(cplx.psi * np.exp(-1j * val)),
                      v_s=cplx.A - grad_chi / k, phi_s=cplx.phi_pot + chidot / k,
                      v_n=cplx.v_n.copy(), p=cplx.p.copy(), rho=cplx.rho.copy(),
                      theta=cplx.theta.copy(), t=cplx.t)


def observables(state) -> dict:
    """Gauge-invariant observables of either formulation."""
    if isinstance(state, ComplexState):
        raise TypeError("map complex states back with gauge_backward first")
    return {"phi2": state.phi**2, "v_s": state.v_s, "phi_s": state.phi_s,
            "v_n": state.v_n, "rho": state.rho, "theta": state.theta, "p": state.p}


# --------------------------------------------------------------- evaluation

def _invariants(cplx: ComplexState, params: ModelParams):
    """Depth-1 extended ``|psi|^2``, current ``J`` and ``Re(conj(psi) grad psi)``."""
    g = cplx.grid
    psiE2 = ext(cplx.psi, g, EVEN, 2)
    psiE1 = trim(psiE2, g)
    AE1 = ext(cplx.A, g, SLIP, omega=params.omega_bc)
    gpsiE1 = go.grad_e(psiE2, g)
    prod = np.conj(psiE1) * gpsiE1
    abs2E1 = np.abs(psiE1) ** 2
    JE1 = abs2E1 * AE1 - prod.imag / params.kappa
    return psiE2, psiE1, AE1, gpsiE1, abs2E1, JE1, prod.real


def evaluate_complex(cplx: ComplexState, params: ModelParams, cfg: StepConfig):
    """Stage evaluation of the transformed system."""
    g = cplx.grid
    chi = _chi(cplx.chi)
    k, kap2, tau = params.kappa, params.kappa**2, params.tau
    rhoE2 = ext(cplx.rho, g, EVEN, 2)
    thE2 = ext(cplx.theta, g, EVEN, 2)
    vnE2 = ext(cplx.v_n, g, NOSLIP, 2)
    rhoE1 = trim(rhoE2, g)
    psiE2, psiE1, AE1, gpsiE1, abs2E1, JE1, reE1 = _invariants(cplx, params)
    rho, th, vn, psi, A = cplx.rho, cplx.theta, cplx.v_n, cplx.psi, cplx.A
    abs2 = trim(abs2E1, g)
    gpsi = trim(gpsiE1, g)

    q = rho * abs2 + params.eps_reg
    phi_s = -go.div_e(rhoE1 * JE1, g) / (tau * kap2 * q)
    chidot = chi.material_rate(g, cplx.t, vn, cfg.advective)
    phi_pot = phi_s - chidot / k

    A2 = np.sum(A * A, axis=0)
    vn2 = np.sum(vn * vn, axis=0)
    im_cur = np.imag(np.conj(psi) * gpsi)
    # psi A.grad(rho) + 2 rho A.grad(psi) + rho psi div(A), rewritten through
    # conj(psi) times the bracket so it reduces to div(rho |psi|^2 A) for real psi
    B = psi * (go.div_e(rhoE1 * abs2E1 * AE1, g) + 2j * rho * np.einsum(
        "i...,i...->...", A, im_cur)) * rho / q
    psi_dot = (go.div_coeff_grad_e(rhoE1, psiE1, g) / kap2
               - 1j * B / k
               - 1j * tau * k * rho * psi * phi_pot
               - rho * psi * (params.theta_lambda * (abs2 - 1.0) + th + params.lam * cplx.p - vn2)
               - rho * psi * A2) / (tau * rho)

    re_dot = np.real(np.conj(psi) * psi_dot)

    def dissip_of(rate):
        return tau * rho * (np.abs(rate) ** 2 + kap2 * abs2 * phi_pot**2
                            + 2.0 * k * phi_pot * np.imag(np.conj(psi) * rate))

    dissip = dissip_of(psi_dot)

    reg = abs2E1 >= params.eps_reg
    safe = np.where(reg, abs2E1, 1.0)
    TE1 = np.where(reg, reE1[:, None] * reE1[None, :] / safe, 0.0)

    sh = shared_rates(g, params, cfg, rhoE2=rhoE2, thE2=thE2, vnE2=vnE2, p=cplx.p,
                      phi2E1=abs2E1, JE1=JE1, TE1=TE1, phi_phidot=re_dot, dissip=dissip)
    grad_pot = go.grad(phi_pot, g)
    A_dot = sh["W"] - grad_pot + sh["grad_theta"]
    if cfg.advective:
        X, Y = g.coords()
        grad_chi = chi.grad(X, Y, cplx.t)
        Gvn = go.vector_grad_e(trim(vnE2, g), g)
        A_dot = A_dot - np.einsum("ji...,j...->i...", Gvn, grad_chi) / k
        psi_t = psi_dot - np.einsum("i...,i...->...", vn, gpsi)
        A_t = A_dot - go.advect_e(vn, AE1, g)
    else:
        psi_t, A_t = psi_dot, A_dot
    if g.dim == 1:
        A_t[1:] = 0.0
        A_dot[1:] = 0.0
    tend = {"psi": psi_t, "A": A_t, "rho": sh["rho_t"], "theta": sh["theta_t"]}
    return Rates(tend=tend, vn_acc=sh["vn_acc"], coef=sh["coef"], target=sh["target"],
                 phi_s=phi_pot, m=None, phi_dot=psi_dot, vs_dot=A_dot, W=sh["W"],
                 div_vn=sh["div_vn"], grad_theta=sh["grad_theta"],
                 extra={"guarded_cells": int(np.sum(~reg)), "phi_s_invariant": phi_s},
                 **pressure_response(params, rho, th, psi, cplx.p, "psi", dissip_of))


def phi_pot_of(cplx: ComplexState, params: ModelParams, advective=True):
    """Gauge-fixed potential of a complex state (see module docstring)."""
    g = cplx.grid
    _, _, _, _, abs2E1, JE1, _ = _invariants(cplx, params)
    rhoE1 = ext(cplx.rho, g)
    q = cplx.rho * trim(abs2E1, g) + params.eps_reg
    phi_s = -go.div_e(rhoE1 * JE1, g) / (params.tau * params.kappa**2 * q)
    chidot = _chi(cplx.chi).material_rate(g, cplx.t, cplx.v_n, advective)
    return phi_s - chidot / params.kappa


def complex_step(cplx: ComplexState, cfg: StepConfig, params: ModelParams) -> ComplexState:
    """One explicit midpoint step of the transformed system."""
    dt = cfg.dt
    r1 = evaluate_complex(cplx, params, cfg)
    mid, _ = advance(cplx, r1, 0.5 * dt, cfg)
    mid = mid.replace(phi_pot=phi_pot_of(mid, params, cfg.advective))
    r2 = evaluate_complex(mid, params, cfg)
    new, _ = advance(cplx, r2, dt, cfg)
    new = new.replace(t=cplx.t + dt)
    return new.replace(phi_pot=phi_pot_of(new, params, cfg.advective))


# --------------------------------------------------------------- identities

def check_identities(real: FieldState, cplx: ComplexState, chi: GaugeField | None,
                     params: ModelParams, real_rates=None, cfg: StepConfig | None = None,
                     discrete: bool = False) -> dict:
    """Max-norm residuals of the transformation identities.

    ``cplx`` must be ``gauge_forward(real, chi)``.  Rates of ``psi`` and
    ``A`` come from the chain rule applied to the real stage rates.  With
    ``discrete=False`` the gradient of ``psi`` is also assembled by the
    chain rule (discrete ``grad phi`` plus analytic ``grad chi``), which
    isolates the algebra; ``discrete=True`` differentiates the sampled
    ``psi`` directly and the residuals then carry the O(h^2) stencil error;
    it also compares the rates of the complex stepper (``psi_rate``,
    ``A_rate``) with the chain-rule rates.
    The outer-product identity skips cells with ``|psi|^2 < eps_reg``;
    their number is reported as ``guarded_cells``.
    """
    from .dynamics import evaluate

    chi = _chi(chi)
    cfg = cfg or StepConfig(dt=1.0)
    g = real.grid
    k = params.kappa
    if real_rates is None:
        real_rates = evaluate(real, params, cfg)
    val, grad_chi, _ = chi.sample(g, real.t)
    chidot = chi.material_rate(g, real.t, real.v_n, cfg.advective)
    phase = np.exp(1j * val)
    phi, psi = real.phi, cplx.psi
    gphi = go.grad(phi, g)
    if discrete:
        gpsi = go.grad(psi, g)
    else:
        gpsi = (gphi + 1j * phi * grad_chi) * phase
    phi_dot = real_rates.phi_dot
    psi_dot = (phi_dot + 1j * phi * chidot) * phase
    vs_dot = real_rates.vs_dot
    Gvn = go.vector_grad_e(ext(real.v_n, g, NOSLIP), g)
    corr = np.einsum("ji...,j...->i...", Gvn, grad_chi) / k if cfg.advective else 0.0
    # Adot = vdot_s + (gradchi)dot/kappa with (gradchi)dot = grad(chidot) - (grad v_n)^T grad chi
    grad_chidot = go.grad(chidot, g)
    A_dot = vs_dot + grad_chidot / k - corr
    phi_s = real.phi_s
    cc = np.conj

    out = {}
    out["velocity_potential"] = np.max(np.abs(
        (vs_dot + go.grad(phi_s, g)) - (A_dot + go.grad(cplx.phi_pot, g) + corr)))
    J = np.abs(psi) ** 2 * cplx.A - (1j / (2 * k)) * (psi * cc(gpsi) - cc(psi) * gpsi)
    out["current"] = np.max(np.abs(phi**2 * real.v_s - J))
    out["phase_rate"] = np.max(np.abs(phi * phi_dot - 0.5 * (psi * cc(psi_dot) + cc(psi) * psi_dot)))
    lhs = phi_dot**2 + k**2 * phi**2 * phi_s**2
    rhs = (np.abs(psi_dot) ** 2 + k**2 * np.abs(psi) ** 2 * cplx.phi_pot**2
           - 1j * k * cplx.phi_pot * (psi_dot * cc(psi) - psi * cc(psi_dot)))
    out["dissipation"] = np.max(np.abs(lhs - rhs))
    a = cc(psi) * gpsi + psi * cc(gpsi)
    abs2 = np.abs(psi) ** 2
    ok = abs2 >= params.eps_reg
    T_c = (a[:, None] * a[None, :]) / (4 * np.where(ok, abs2, 1.0))
    T_r = gphi[:, None] * gphi[None, :]
    out["outer_product"] = float(np.max(np.where(ok, np.abs(T_r - T_c), 0.0), initial=0.0))
    out["guarded_cells"] = int(np.sum(~ok))
    grad_psi_id = (gphi + 1j * phi * grad_chi) * phase
    out["grad_psi"] = np.max(np.abs(go.grad(psi, g) - grad_psi_id)) if discrete else 0.0
    if discrete:
        rc = evaluate_complex(cplx, params, cfg)
        out["psi_rate"] = np.max(np.abs(rc.phi_dot - psi_dot))
        out["A_rate"] = np.max(np.abs(rc.vs_dot - A_dot))
    return {key: float(v) for key, v in out.items()}


def dual_run(real: FieldState, chis, cfg: StepConfig, params: ModelParams, n_steps: int):
    """Evolve ``real`` in several gauges; return mapped-back final states and
    the per-step max discrepancy of every observable against the first gauge."""
    states = [gauge_forward(real, c, params, cfg.material_derivative) for c in chis]
    rows = []
    for i in range(n_steps):
        states = [complex_step(s, cfg, params) for s in states]
        back = [gauge_backward(s, c, params, cfg.material_derivative)
                for s, c in zip(states, chis)]
        ref = observables(back[0])
        row = {"step": i + 1, "t": back[0].t}
        for name in ref:
            row[name] = max(float(np.max(np.abs(observables(b)[name] - ref[name])))
                            for b in back[1:]) if len(back) > 1 else 0.0
        rows.append(row)
    back = [gauge_backward(s, c, params, cfg.material_derivative)
            for s, c in zip(states, chis)]
    return back, rows
