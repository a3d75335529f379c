"""Homogeneous equilibria, the lambda-line and relaxation toward equilibrium."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import ModelParams
from .thermo import stationary_phase


def equilibrium_phase(theta, p, vs2, vn2, params: ModelParams):
    """Order parameter of the homogeneous steady state at ``(theta, p)``."""
    return stationary_phase(theta + params.lam * p + vs2 - vn2, params)


@dataclass
class SweepResult:
    theta: np.ndarray
    p: np.ndarray
    phi_eq: np.ndarray          # shape (len(p), len(theta))
    theta_line: np.ndarray      # nan where the line leaves the window
    slope: float                # dp/dtheta of the fitted line; -inf/inf if vertical
    dtheta_dp: float            # fitted d(theta)/dp
    vertical: bool
    message: str = ""


def _crossing(theta, phi, k):
    """Zero of ``phi^2`` between ``theta[k]`` (ordered) and ``theta[k+1]`` (normal).

    ``phi^2`` is affine in ``theta`` on the ordered side, so the secant
    through the last two ordered samples is extended to zero; the estimate
    is clipped to the bracketing cell.  With a single ordered sample the
    bracket midpoint is used.
    """
    lo, hi = theta[k], theta[k + 1]
    if k >= 1 and phi[k - 1] > 0:
        y0, y1 = phi[k - 1] ** 2, phi[k] ** 2
        if y1 != y0:
            t = theta[k] - y1 * (theta[k] - theta[k - 1]) / (y1 - y0)
            return float(np.clip(t, lo, hi))
    return 0.5 * (lo + hi)


def extract_line(theta, phi_row):
    """Temperature where the ordered phase ends along one row, or nan."""
    pos = phi_row > 0
    if pos.all() or not pos.any():
        return np.nan
    k = int(np.flatnonzero(pos)[-1])
    if k + 1 >= len(theta) or pos[k + 1:].any():
        return np.nan
    return _crossing(theta, phi_row, k)


def sweep(theta_grid, p_grid, params: ModelParams, vs2: float = 0.0, vn2: float = 0.0,
          vertical_tol: float = 1e-9) -> SweepResult:
    """Equilibrium phase map over ``(theta, p)`` and the extracted lambda-line.

    The line is fitted as ``theta = a + b p`` by least squares; its slope in
    the ``(theta, p)`` plane is ``dp/dtheta = 1/b``.  ``b == 0`` is reported
    as a vertical line.
    """
    theta = np.asarray(theta_grid, dtype=float)
    p = np.asarray(p_grid, dtype=float)
    if np.any(np.diff(theta) <= 0) or np.any(np.diff(p) <= 0):
        raise ValueError("grids must be strictly increasing")
    TH, P = np.meshgrid(theta, p)
    phi = equilibrium_phase(TH, P, vs2, vn2, params)
    line = np.array([extract_line(theta, row) for row in phi])
    ok = np.isfinite(line)
    msg = ""
    if ok.sum() < 2:
        return SweepResult(theta, p, phi, line, np.nan, np.nan, False,
                           "lambda-line absent from the window")
    if ok.sum() < len(p):
        msg = f"line leaves the window at {len(p) - ok.sum()} pressures"
    b, a = np.polyfit(p[ok], line[ok], 1)
    vertical = abs(b) < vertical_tol
    slope = np.copysign(np.inf, -1.0) if vertical else 1.0 / b
    return SweepResult(theta, p, phi, line, float(slope), float(b), bool(vertical), msg)


def relax_to_equilibrium(theta, p, vs2, phi0, params: ModelParams, t_end=None,
                         rtol=1e-12, atol=1e-14):
    """Integrate ``tau phidot = -theta_lambda phi (phi^2 - 1) - m phi``.

    Returns the scipy ``OdeResult``; ``sol.y[0, -1]`` is the terminal value.
    The default horizon scales with the inverse distance of ``m`` from
    ``theta_lambda``, which sets the slowest linear relaxation rate.
    """
    m = theta + params.lam * p + vs2
    tl, tau = params.theta_lambda, params.tau
    if t_end is None:
        gap = max(abs(tl - m), 1e-3)
        t_end = tau * (20.0 + 40.0 / gap)

    def f(t, y):
        return [(-tl * y[0] * (y[0] ** 2 - 1.0) - m * y[0]) / tau]

    def jac(t, y):
        return [[(-tl * (3 * y[0] ** 2 - 1.0) - m) / tau]]

    return solve_ivp(f, (0.0, t_end), [phi0], method="LSODA", jac=jac,
                     rtol=rtol, atol=atol, dense_output=True)
