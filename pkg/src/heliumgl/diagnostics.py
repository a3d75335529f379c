"""Energy/power budgets, entropy production and boundary-flux audits.

Time derivatives are reconstructed from two consecutive snapshots with a
midpoint rule: for any field ``X``

    D(X) = (X_new - X_prev)/dt + vbar_n . grad((X_new + X_prev)/2)

(the transport term is dropped in ``"partial"`` mode).  Coefficients that
multiply a rate are evaluated on the averaged state.  ``D`` is linear, so
``D(E)`` splits exactly into the rates of its parts and the first-law
residual only measures the O(dt^2 + h^2) product-rule defect of the
discretisation.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import gridops as go
from . import thermo
from .core import FieldState, Grid, ModelParams
from .gridops import EVEN, NOSLIP, SLIP, ext, trim

CSV_COLUMNS = ["t", "E_total", "mass_total", "P_i_phi", "P_e_phi", "P_i_vs", "P_e_vs",
               "first_law_residual", "entropy_production_min", "constraint_residual",
               "flux_q", "flux_phase", "flux_pvn", "flux_vs"]


@dataclass
class DiagnosticsReport:
    t: float
    E_total: float = np.nan
    mass_total: float = np.nan
    P_i_phi: float = np.nan
    P_e_phi: float = np.nan
    P_i_vs: float = np.nan
    P_e_vs: float = np.nan
    first_law_residual: float = np.nan
    entropy_production_min: float = np.nan
    constraint_residual: float = np.nan
    flux_q: float = np.nan
    flux_phase: float = np.nan
    flux_pvn: float = np.nan
    flux_vs: float = np.nan
    enforced_constraint_residual: float = np.nan
    compat_defect: float = np.nan
    cfl: float = np.nan
    warnings: list = field(default_factory=list)
    sigma: np.ndarray | None = field(default=None, repr=False)

    def row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


# ------------------------------------------------------------ small helpers

def _mean_state(a: FieldState, b: FieldState) -> FieldState:
    names = ("phi", "v_s", "phi_s", "v_n", "p", "rho", "theta")
    return dataclasses.replace(a, **{k: 0.5 * (getattr(a, k) + getattr(b, k)) for k in names})


def _dot(a, b):
    return np.einsum("i...,i...->...", a, b)


def _frob(G, T):
    return np.einsum("ij...,ij...->...", G, T)


def _cross(a, b):
    return np.cross(a, b, axis=0)


def _layer(a, lead, ax, i):
    sl = [slice(None)] * a.ndim
    sl[lead + ax] = i
    return tuple(sl)


def _wall_product(TE1, vE1, grid: Grid):
    """``T v`` on a depth-1 extended grid with wall-consistent ghost values.

    A ghost value is set so that its mean with the adjacent interior cell is
    the product of the face means of ``T`` and ``v``.  Averaging the product
    itself would leave an O(h) wall flux even where ``v`` vanishes on the face.
    """
    out = np.einsum("ij...,j...->i...", TE1, vE1)
    for ax in range(grid.dim):
        for ghost, inner in ((0, 1), (-1, -2)):
            Tf = 0.5 * (TE1[_layer(TE1, 2, ax, ghost)] + TE1[_layer(TE1, 2, ax, inner)])
            vf = 0.5 * (vE1[_layer(vE1, 1, ax, ghost)] + vE1[_layer(vE1, 1, ax, inner)])
            face = np.einsum("ij...,j...->i...", Tf, vf)
            out[_layer(out, 1, ax, ghost)] = 2 * face - out[_layer(out, 1, ax, inner)]
    return out


class _Rates:
    """Snapshot-difference rates on the averaged state."""

    def __init__(self, prev: FieldState, new: FieldState, dt: float, params: ModelParams,
                 advective: bool):
        self.g = g = new.grid
        self.params = params
        self.dt = dt
        self.bar = bar = _mean_state(prev, new)
        self.prev, self.new = prev, new
        self.adv = advective
        self.vnE2 = ext(bar.v_n, g, NOSLIP, 2)
        self.vn = bar.v_n

    def D(self, x_new, x_prev, rule=EVEN):
        out = (x_new - x_prev) / self.dt
        if self.adv:
            avg = 0.5 * (x_new + x_prev)
            aE = ext(avg, self.g, rule, omega=self.params.omega_bc)
            out = out + go.advect_e(self.vn, aE, self.g)
        return out


def _energy_parts(s: FieldState, params: ModelParams):
    g = s.grid
    gphi = go.grad(s.phi, g)
    grad_pot = (np.sum(gphi * gphi, axis=0) / (2 * params.kappa**2)
                + params.theta_lambda * (0.25 * s.phi**4 - 0.5 * s.phi**2))
    e0 = params.c0 * s.theta
    kin = thermo.kinetic_energy_density(s.phi, s.v_s, s.v_n)
    return grad_pot, e0, kin


def power_fields(prev: FieldState, new: FieldState, dt: float, params: ModelParams,
                 material_derivative: str = "advective") -> dict:
    """Pointwise internal/external powers, heat rate and energy rate."""
    R = _Rates(prev, new, dt, params, material_derivative == "advective")
    g, b = R.g, R.bar
    kap2 = params.kappa**2
    rho, phi, th, vs, vn, phis = b.rho, b.phi, b.theta, b.v_s, b.v_n, b.phi_s
    p = new.p
    phi2 = phi * phi

    phiE2 = ext(phi, g, EVEN, 2)
    gphiE1 = go.grad_e(phiE2, g)
    gphi = trim(gphiE1, g)
    TE1 = gphiE1[:, None] * gphiE1[None, :]
    T = trim(TE1, g)
    vnE2 = R.vnE2
    vnE1 = trim(vnE2, g)
    Gvn = go.vector_grad_e(vnE1, g)
    div_vn = go.div_e(vnE1, g)
    pE1 = ext(p, g, EVEN)
    grad_p = go.grad_e(pE1, g)
    thE1 = ext(th, g, EVEN)
    grad_th = go.grad_e(thE1, g)
    phisE2 = ext(phis, g, EVEN, 2)
    grad_phisE1 = go.grad_e(phisE2, g)
    grad_phis = trim(grad_phisE1, g)

    gp_new, e0_new, kin_new = _energy_parts(new, params)
    gp_old, e0_old, kin_old = _energy_parts(prev, params)
    D_gp = R.D(gp_new, gp_old)
    D_E = R.D(gp_new + e0_new + kin_new, gp_old + e0_old + kin_old)
    D_phi = R.D(new.phi, prev.phi)
    D_theta = R.D(new.theta, prev.theta)
    D_vs = R.D(new.v_s, prev.v_s, SLIP)
    D_vn = R.D(new.v_n, prev.v_n, NOSLIP)
    D_vn2 = R.D(np.sum(new.v_n**2, axis=0), np.sum(prev.v_n**2, axis=0))

    vs2 = np.sum(vs * vs, axis=0)
    vn2 = np.sum(vn * vn, axis=0)
    Wd = D_vs + grad_phis - grad_th
    Wd2 = np.sum(Wd * Wd, axis=0)
    GT = _frob(Gvn, T)

    P_i_phi = (rho * D_gp + rho * (th + vs2 - vn2) * phi * D_phi - _dot(vn, grad_p)
               + params.tau * rho * D_phi**2 + GT / kap2)
    rhoE1 = ext(rho, g)
    DphiE1 = ext(D_phi, g)
    P_e_phi = go.div_e(rhoE1 * DphiE1 * gphiE1 / kap2 - pE1 * vnE1, g)

    P_i_vs = (Wd2 + 0.5 * rho * D_vn2 - rho * phi2 * _dot(vn, D_vn) + params.nu * div_vn**2
              + _dot(vn, grad_p) - GT / kap2 + rho * phi2 * _dot(vs, D_vs)
              + params.tau * kap2 * rho * phi2 * phis**2
              - rho * phi2 * _dot(vs - vn, grad_th))
    DvsE1 = ext(D_vs, g, SLIP, omega=params.omega_bc)
    thE2 = ext(th, g, EVEN, 2)
    grad_thE1 = go.grad_e(thE2, g)
    div_vnE1 = ext(div_vn, g, EVEN)
    vsE1 = ext(vs, g, SLIP, omega=params.omega_bc)
    phiE1 = trim(phiE2, g)
    TvE1 = _wall_product(TE1, vnE1, g)
    bracket = (_cross(vnE1, DvsE1) + _cross(vnE1, grad_phisE1) - _cross(vnE1, grad_thE1)
               - params.nu * vnE1 * div_vnE1 + TvE1 / kap2
               + rhoE1 * phiE1**2 * vsE1 * trim(phisE2, g))
    P_e_vs = -go.div_e(bracket, g) + rho * _dot(params.body_force(g), vn)

    rho_h = (rho * params.c0 * D_theta - rho * th * phi * D_phi - params.tau * rho * D_phi**2
             - Wd2 - params.nu * div_vn**2 - params.tau * kap2 * rho * phi2 * phis**2
             + rho * phi2 * _dot(vs - vn, grad_th))
    return dict(P_i_phi=P_i_phi, P_e_phi=P_e_phi, P_i_vs=P_i_vs, P_e_vs=P_e_vs,
                rho_h=rho_h, rho_DE=rho * D_E, D_phi=D_phi, D_vs=D_vs, grad_phi=gphi)


def phase_powers(state: FieldState, state_prev: FieldState, dt: float, params: ModelParams,
                 material_derivative="advective"):
    """Domain integrals ``(P_i_phi, P_e_phi)`` between two snapshots."""
    f = power_fields(state_prev, state, dt, params, material_derivative)
    g = state.grid
    return g.integrate(f["P_i_phi"]), g.integrate(f["P_e_phi"])


def vs_powers(state: FieldState, state_prev: FieldState, dt: float, params: ModelParams,
              material_derivative="advective"):
    """Domain integrals ``(P_i_vs, P_e_vs)`` between two snapshots."""
    f = power_fields(state_prev, state, dt, params, material_derivative)
    g = state.grid
    return g.integrate(f["P_i_vs"]), g.integrate(f["P_e_vs"])


def first_law_residual(state: FieldState, state_prev: FieldState, dt: float,
                       params: ModelParams, material_derivative="advective") -> float:
    """``integral(rho dE/dt - P_i_phi - P_i_vs - rho h)`` over the domain."""
    f = power_fields(state_prev, state, dt, params, material_derivative)
    return state.grid.integrate(f["rho_DE"] - f["P_i_phi"] - f["P_i_vs"] - f["rho_h"])


def entropy_production(state: FieldState, phi_dot, vs_dot, params: ModelParams,
                       phi_s=None):
    """Pointwise dissipation ``sigma``; nonnegative for admissible parameters.

    ``sigma = tau rho phidot^2 + |vs_dot + grad phi_s - grad theta|^2
    + nu (div v_n)^2 + tau kappa^2 rho phi^2 phi_s^2 + k0/theta |grad theta|^2``.
    """
    g = state.grid
    phi_s = state.phi_s if phi_s is None else phi_s
    grad_th = go.grad(state.theta, g)
    W = vs_dot + go.grad(phi_s, g) - grad_th
    dv = go.div(state.v_n, g, NOSLIP)
    return (params.tau * state.rho * phi_dot**2 + np.sum(W * W, axis=0)
            + params.nu * dv**2
            + params.tau * params.kappa**2 * state.rho * state.phi**2 * phi_s**2
            + params.k0(state.theta) / state.theta * np.sum(grad_th**2, axis=0))


def _face_integrals(FE1, grid: Grid):
    """Outward face integrals ``int F.n ds`` on every boundary face.

    ``FE1`` is a vector field with one ghost layer; the face value is the
    mean of the ghost and the adjacent interior cell.
    """
    out = {}
    for ax in range(grid.dim):
        area = grid.cell_volume / grid.spacing[ax]
        comp = FE1[ax]
        inner = [slice(1, -1)] * grid.dim
        inner[ax] = slice(None)
        c = comp[tuple(inner)]
        n = c.shape[ax]
        lo = 0.5 * (np.take(c, 0, axis=ax) + np.take(c, 1, axis=ax))
        hi = 0.5 * (np.take(c, n - 1, axis=ax) + np.take(c, n - 2, axis=ax))
        out[("xy"[ax], 0)] = -area * float(np.sum(lo))
        out[("xy"[ax], 1)] = area * float(np.sum(hi))
    return out


def boundary_flux_audit(state: FieldState, params: ModelParams, phi_dot=None, vs_dot=None,
                        vn_face=None) -> dict:
    """Surface integrals of the boundary fluxes that the model requires to vanish.

    Returns ``{"q", "phase", "pvn", "vs"}`` each summed as ``sum |int F.n ds|``
    over all faces, plus ``"vs_tangential"`` (the tangential trace of
    ``v_s``, which depends on ``omega_bc``).  ``vn_face`` maps a face key
    such as ``("x", 0)`` to a prescribed normal trace of ``v_n``; it
    deliberately breaks the no-slip rule and exists for negative controls.
    """
    from .dynamics import StepConfig, evaluate

    g = state.grid
    if phi_dot is None or vs_dot is None:
        r = evaluate(state, params, StepConfig(dt=1.0))
        phi_dot = r.phi_dot if phi_dot is None else phi_dot
        vs_dot = r.vs_dot if vs_dot is None else vs_dot
    kap2 = params.kappa**2
    om = params.omega_bc
    phiE2 = ext(state.phi, g, EVEN, 2)
    thE2 = ext(state.theta, g, EVEN, 2)
    phisE2 = ext(state.phi_s, g, EVEN, 2)
    vnE2 = ext(state.v_n, g, NOSLIP, 2)
    if vn_face:
        for (axname, side), val in vn_face.items():
            ax = "xy".index(axname)
            comp = vnE2[ax]
            sl_g = [slice(None)] * g.dim
            sl_i = [slice(None)] * g.dim
            sl_g[ax] = 1 if side == 0 else -2
            sl_i[ax] = 2 if side == 0 else -3
            comp[tuple(sl_g)] = 2.0 * val - comp[tuple(sl_i)]
    vnE1 = trim(vnE2, g)
    rhoE1 = ext(state.rho, g)
    phiE1 = trim(phiE2, g)
    thE1 = trim(thE2, g)
    vsE1 = ext(state.v_s, g, SLIP, omega=om)
    pE1 = ext(state.p, g)
    gphiE1 = go.grad_e(phiE2, g)
    gthE1 = go.grad_e(thE2, g)
    gphisE1 = go.grad_e(phisE2, g)
    div_vnE1 = ext(go.div_e(vnE1, g), g)
    TvE1 = _wall_product(gphiE1[:, None] * gphiE1[None, :], vnE1, g)

    q = -params.k0(thE1) * gthE1 - rhoE1 * phiE1**2 * thE1 * (vsE1 - vnE1)
    phase = rhoE1 * ext(phi_dot, g) * gphiE1 / kap2
    pvn = pE1 * vnE1
    vs_br = (_cross(vnE1, ext(vs_dot, g, SLIP, omega=om)) + _cross(vnE1, gphisE1)
             - _cross(vnE1, gthE1) - params.nu * vnE1 * div_vnE1 + TvE1 / kap2
             + rhoE1 * phiE1**2 * vsE1 * trim(phisE2, g))
    out = {}
    for name, F in (("q", q), ("phase", phase), ("pvn", pvn), ("vs", vs_br)):
        out[name] = sum(abs(v) for v in _face_integrals(F, g).values())
    tang = 0.0
    for ax in range(g.dim):
        for c in range(3):
            if c == ax:
                continue
            e = np.zeros_like(vsE1)
            e[ax] = vsE1[c]
            tang += sum(abs(v) for v in _face_integrals(e, g).values())
    out["vs_tangential"] = tang
    return out


def step_report(prev: FieldState, new: FieldState, mid: FieldState, rates, info, cfg,
                params: ModelParams) -> DiagnosticsReport:
    """Diagnostics for one completed step (used by the stepper)."""
    g = new.grid
    warnings = new.check(cfg.tol_phase)
    sigma = entropy_production(mid, rates.phi_dot, rates.vs_dot, params, phi_s=rates.phi_s)
    strict = float(np.max(np.abs(go.div(new.v_n, g, NOSLIP) - rates.target)))
    if "v_n" in cfg.pinned:
        strict = info["constraint_residual"]
    rep = DiagnosticsReport(
        t=new.t, mass_total=g.integrate(new.rho),
        entropy_production_min=float(np.min(sigma)), constraint_residual=strict,
        enforced_constraint_residual=info["constraint_residual"],
        compat_defect=info["compat_defect"],
        cfl=float(np.max(np.abs(new.v_n))) * cfg.dt / min(g.spacing),
        warnings=warnings, sigma=sigma)
    if not cfg.diagnostics:
        return rep
    gp, e0, kin = _energy_parts(new, params)
    rep.E_total = g.integrate(new.rho * (gp + e0 + kin))
    f = power_fields(prev, new, cfg.dt, params, cfg.material_derivative)
    rep.P_i_phi = g.integrate(f["P_i_phi"])
    rep.P_e_phi = g.integrate(f["P_e_phi"])
    rep.P_i_vs = g.integrate(f["P_i_vs"])
    rep.P_e_vs = g.integrate(f["P_e_vs"])
    rep.first_law_residual = g.integrate(f["rho_DE"] - f["P_i_phi"] - f["P_i_vs"] - f["rho_h"])
    fl = boundary_flux_audit(new, params, phi_dot=rates.phi_dot, vs_dot=rates.vs_dot)
    rep.flux_q, rep.flux_phase, rep.flux_pvn, rep.flux_vs = (
        fl["q"], fl["phase"], fl["pvn"], fl["vs"])
    return rep


def entropy_ramp(params: ModelParams, thetas, p: float = 0.0, rho: float = 1.0,
                 volume: float = 1.0):
    """Total entropy ``int rho eta`` along a quasi-static temperature ramp.

    Each ramp point is the homogeneous equilibrium (velocities zero,
    uniform ``p``).  Returns ``(S, jump)`` where ``jump`` is the mismatch of
    one-sided linear extrapolations of ``S`` to the transition temperature;
    a latent heat would show up as a jump independent of the ramp spacing.
    """
    from .phase_diagram import equilibrium_phase

    thetas = np.asarray(thetas, dtype=float)
    phi = np.array([equilibrium_phase(t, p, 0.0, 0.0, params) for t in thetas])
    S = volume * rho * thermo.entropy_density(phi, thetas, params)
    t_c = params.theta_lambda - params.lam * p
    below = np.flatnonzero(thetas < t_c)
    above = np.flatnonzero(thetas >= t_c)
    if len(below) < 2 or len(above) < 2:
        return S, np.nan

    def extrap(i, j):
        slope = (S[j] - S[i]) / (thetas[j] - thetas[i])
        return S[j] + slope * (t_c - thetas[j])

    left = extrap(below[-2], below[-1])
    right = extrap(above[1], above[0])
    return S, float(abs(right - left))
