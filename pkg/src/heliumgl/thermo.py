"""Pointwise constitutive functions.

Potentials ``F(phi) = phi^4/4 - phi^2/2`` and ``G(phi) = phi^2/2`` combine
into ``W = theta_lambda*F + m*G``.  The thermal closure is a constant
specific heat: ``e0(theta) = c0*theta`` and ``Psi0(theta) = -c0*theta*ln(theta)``,
which satisfies ``Psi0 - theta*Psi0' = e0``.

All functions broadcast over numpy arrays.  Vector arguments carry their
three components on the leading axis.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .core import ModelParams


class PotentialEval(NamedTuple):
    F: np.ndarray
    dF: np.ndarray
    G: np.ndarray
    dG: np.ndarray
    W: np.ndarray
    dW: np.ndarray


def potential_w(phi, m, params: ModelParams) -> PotentialEval:
    phi = np.asarray(phi, dtype=float)
    phi2 = phi * phi
    F = 0.25 * phi2 * phi2 - 0.5 * phi2
    dF = phi * (phi2 - 1.0)
    G = 0.5 * phi2
    dG = phi
    tl = params.theta_lambda
    return PotentialEval(F, dF, G, dG, tl * F + m * G, tl * dF + m * dG)


def stationary_phase(m, params: ModelParams):
    """Nonnegative global minimiser of ``W`` for tilt ``m``.

    Zero for ``m >= theta_lambda`` (normal phase), else
    ``sqrt(1 - m/theta_lambda)``.
    """
    m = np.asarray(m, dtype=float)
    out = np.sqrt(np.clip(1.0 - m / params.theta_lambda, 0.0, None))
    return out if out.ndim else float(out)


def _positive(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise ValueError("temperature must be positive")
    return theta


def psi0(theta, params: ModelParams):
    theta = _positive(theta)
    return -params.c0 * theta * np.log(theta)


def dpsi0(theta, params: ModelParams):
    theta = _positive(theta)
    return -params.c0 * (np.log(theta) + 1.0)


def e0(theta, params: ModelParams):
    return params.c0 * _positive(theta)


def _grad2(grad_phi):
    g = np.asarray(grad_phi, dtype=float)
    return np.sum(g * g, axis=0) if g.ndim and g.shape[0] == 3 else g * g


def free_energy_density(phi, grad_phi, theta, params: ModelParams):
    phi = np.asarray(phi, dtype=float)
    phi2 = phi * phi
    return (params.theta_lambda * (0.25 * phi2 * phi2 - 0.5 * phi2)
            + 0.5 * theta * phi2
            + _grad2(grad_phi) / (2.0 * params.kappa**2)
            + psi0(theta, params))


def entropy_density(phi, theta, params: ModelParams):
    """``eta = -d(Psi)/d(theta) = -phi^2/2 - Psi0'(theta)``."""
    phi = np.asarray(phi, dtype=float)
    return -0.5 * phi * phi - dpsi0(theta, params)


def internal_energy_density(phi, grad_phi, theta, params: ModelParams):
    phi = np.asarray(phi, dtype=float)
    phi2 = phi * phi
    return (_grad2(grad_phi) / (2.0 * params.kappa**2)
            + params.theta_lambda * (0.25 * phi2 * phi2 - 0.5 * phi2)
            + e0(theta, params))


def kinetic_energy_density(phi, v_s, v_n):
    phi2 = np.asarray(phi, dtype=float) ** 2
    return 0.5 * phi2 * np.sum(np.square(v_s), axis=0) + 0.5 * (1.0 - phi2) * np.sum(
        np.square(v_n), axis=0)


def total_energy_density(phi, grad_phi, theta, v_s, v_n, params: ModelParams):
    return internal_energy_density(phi, grad_phi, theta, params) + kinetic_energy_density(
        phi, v_s, v_n)


def heat_flux(phi, theta, grad_theta, v_s, v_n, rho, params: ModelParams):
    """``q = -k0(theta) grad(theta) - rho phi^2 theta (v_s - v_n)``."""
    theta = _positive(theta)
    w = np.asarray(rho) * np.asarray(phi) ** 2 * theta
    return -params.k0(theta) * np.asarray(grad_theta) - w * (np.asarray(v_s) - np.asarray(v_n))


def latent_heat(params: ModelParams, phase_at_transition=None) -> float:
    """Latent heat of the transition at ``theta_lambda``.

    Evaluated from the entropy jump between the ordered minimiser and the
    normal phase.  ``phase_at_transition`` overrides the minimiser (used to
    check that the formula is actually wired in).
    """
    th = params.theta_lambda
    phi0 = stationary_phase(th, params) if phase_at_transition is None else phase_at_transition
    return float(th * (entropy_density(phi0, th, params) - entropy_density(0.0, th, params)))
