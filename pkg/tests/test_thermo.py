import numpy as np
import pytest

from heliumgl import ModelParams
from heliumgl.thermo import (dpsi0, e0, entropy_density, free_energy_density, heat_flux,
                             internal_energy_density, kinetic_energy_density, latent_heat,
                             potential_w, psi0, stationary_phase, total_energy_density)
from oracles import phase_minimiser

P = ModelParams()
TL = P.theta_lambda


def test_potential_values():
    ev = potential_w(0.0, 1.3, P)
    assert ev.W == 0.0 and ev.dW == 0.0
    assert potential_w(1.0, TL, P).W == pytest.approx(TL / 4)
    phi = np.linspace(-2, 2, 41)
    ev = potential_w(phi, 0.7, P)
    assert np.allclose(ev.dF, phi**3 - phi, atol=1e-15)
    assert np.allclose(ev.F, potential_w(-phi, 0.7, P).F) and np.allclose(ev.G, ev.G[::-1])


@pytest.mark.parametrize("part", ["F", "G", "W"])
def test_derivatives_match_finite_differences(part):
    phi = np.linspace(-2, 2, 201)
    h = 1e-6
    fd = (getattr(potential_w(phi + h, 0.9, P), part)
          - getattr(potential_w(phi - h, 0.9, P), part)) / (2 * h)
    exact = getattr(potential_w(phi, 0.9, P), "d" + part)
    assert np.max(np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))) <= 1e-6


def test_stationary_phase_closed_form():
    assert stationary_phase(TL, P) == 0.0
    assert stationary_phase(0.0, P) == 1.0
    assert stationary_phase(1.085, P) == pytest.approx(0.7071067811865476, abs=1e-12)
    assert stationary_phase(5.0, P) == 0.0
    assert phase_minimiser(TL, 1.085) == pytest.approx(0.7071067811865476, abs=1e-10)


def test_stationary_phase_is_global_minimiser():
    phi = np.linspace(-1.5, 1.5, 1000)
    for m in np.linspace(0, 2 * TL, 25):
        w0 = potential_w(stationary_phase(m, P), m, P).W
        assert np.all(w0 <= potential_w(phi, m, P).W + 1e-15)


def test_stationary_phase_monotone():
    m = np.linspace(0, 2 * TL, 500)
    phi = stationary_phase(m, P)
    assert np.all(np.diff(phi) <= 0) and np.all(phi[m >= TL] == 0)
    assert np.all((phi >= 0) & (phi <= 1))


def test_energy_and_entropy_relations():
    theta = np.linspace(0.3, 4.0, 50)
    phi = 0.6
    h = 1e-5

    def psi(th):
        return free_energy_density(phi, 0.2, th, P)

    dpsi = (psi(theta + h) - psi(theta - h)) / (2 * h)
    assert np.allclose(entropy_density(phi, theta, P), -dpsi, atol=1e-9)
    assert np.allclose(internal_energy_density(phi, 0.2, theta, P), psi(theta) - theta * dpsi,
                       atol=1e-9)
    # the closure satisfies Psi0 - theta Psi0' = e0
    assert np.allclose(psi0(theta, P) - theta * dpsi0(theta, P), e0(theta, P), atol=1e-14)


def test_thermal_examples():
    assert free_energy_density(0.0, 0.0, 1.0, P) == 0.0
    assert entropy_density(0.0, 1.0, P) == pytest.approx(1.0)
    assert internal_energy_density(1.0, 0.0, 1.7, P) == pytest.approx(-0.5425 + 1.7)
    with pytest.raises(ValueError):
        entropy_density(0.1, 0.0, P)
    with pytest.raises(ValueError):
        free_energy_density(0.1, 0.0, -1.0, P)


def test_free_energy_phase_derivative():
    phi, th, h = 0.4, 1.3, 1e-6
    fd = (free_energy_density(phi + h, 0.0, th, P) - free_energy_density(phi - h, 0.0, th, P)) / (2 * h)
    assert fd == pytest.approx(TL * phi * (phi**2 - 1) + th * phi, rel=1e-8)


def test_kinetic_energy():
    v = np.array([1.0, 0.0, 0.0])
    assert kinetic_energy_density(np.sqrt(0.5), v, v) == pytest.approx(0.5)
    assert kinetic_energy_density(1.0, 2 * v, 5 * v) == pytest.approx(2.0)
    assert total_energy_density(0.0, 0.0, 2.0, 0 * v, 0 * v, P) == pytest.approx(2.0)


def test_heat_flux():
    g = np.array([0.5, -1.0, 0.0])
    assert np.array_equal(heat_flux(0.0, 2.0, g, g, 0 * g, 1.0, P), -P.k0(2.0) * g)
    z = np.zeros(3)
    assert np.allclose(heat_flux(0.7, 2.0, z, g, g, 1.0, P), 0.0)
    q = heat_flux(1.0, 2.0, z, np.array([1.0, 0, 0]), z, 1.0, P)
    assert np.allclose(q, [-2.0, 0.0, 0.0])


@pytest.mark.parametrize("c0", [0.3, 1.0, 7.0])
def test_latent_heat_zero(c0):
    p = ModelParams(c0=c0)
    assert latent_heat(p) == 0.0
    assert latent_heat(p, phase_at_transition=0.5) == pytest.approx(-p.theta_lambda * 0.125)
