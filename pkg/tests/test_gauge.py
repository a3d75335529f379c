import numpy as np
import pytest

from heliumgl import (ComplexState, GaugeField, Grid, ModelParams, StepConfig, complex_step,
                      gauge_backward, gauge_forward, new_state, step)
from heliumgl.dynamics import make_consistent
from heliumgl.gauge import check_identities, dual_run, observables

P = ModelParams()
L = 6.4


def smooth_state(n=32, length=L):
    g = Grid.line(n, length)
    s = new_state(g, {"phi": lambda X, Y: 0.5 + 0.2 * np.cos(np.pi * X / length),
                      "theta": lambda X, Y: 1.5 + 0.1 * np.cos(2 * np.pi * X / length),
                      "v_s": lambda X, Y: 0.1 * np.sin(np.pi * X / length),
                      "rho": lambda X, Y: 1 + 0.05 * np.cos(np.pi * X / length)})
    return make_consistent(s, P, StepConfig(dt=1e-3))


def test_identity_gauge_maps_trivially():
    s = smooth_state()
    c = gauge_forward(s, GaugeField.zero(), P)
    assert isinstance(c, ComplexState)
    assert np.array_equal(c.psi.real, s.phi) and np.all(c.psi.imag == 0)
    assert np.array_equal(c.A, s.v_s) and np.array_equal(c.phi_pot, s.phi_s)


def test_constant_gauge():
    s = smooth_state()
    c = gauge_forward(s, GaugeField.constant(0.8), P)
    assert np.allclose(c.psi, s.phi * np.exp(0.8j), atol=1e-15)
    assert np.allclose(np.abs(c.psi), np.abs(s.phi), atol=1e-15)
    assert np.array_equal(c.A, s.v_s) and np.array_equal(c.phi_pot, s.phi_s)


@pytest.mark.parametrize("chi", [GaugeField.zero(), GaugeField.constant(-1.3),
                                 GaugeField.cosine(0.3, L), GaugeField.cosine(0.5, L, 0.7)])
def test_round_trip(chi):
    s = smooth_state()
    back = gauge_backward(gauge_forward(s, chi, P), chi, P)
    assert back.max_diff(s) <= 1e-14


def test_observables_reject_complex_state():
    c = gauge_forward(smooth_state(), GaugeField.zero(), P)
    with pytest.raises(TypeError):
        observables(c)


def test_identities_hold_in_identity_gauge():
    s = smooth_state()
    res = check_identities(s, gauge_forward(s, GaugeField.zero(), P), None, P)
    assert all(v <= 1e-12 for k, v in res.items() if k != "guarded_cells")


def test_chain_rule_identities_for_smooth_gauge():
    s = smooth_state()
    chi = GaugeField.cosine(0.3, L, 0.4)
    res = check_identities(s, gauge_forward(s, chi, P), chi, P)
    assert res["guarded_cells"] == 0
    assert all(v <= 1e-12 for k, v in res.items() if k != "guarded_cells")


def test_discrete_identity_residuals_converge():
    chi = GaugeField.cosine(0.3, L)
    out = []
    for n in (32, 64):
        s = smooth_state(n)
        out.append(check_identities(s, gauge_forward(s, chi, P), chi, P, discrete=True))
    for key in ("current", "grad_psi", "psi_rate", "A_rate"):
        assert out[0][key] / out[1][key] == pytest.approx(4.0, abs=0.6), key


def test_complex_step_matches_real_step_in_identity_gauge():
    s = smooth_state()
    cfg = StepConfig(dt=1e-3)
    c = gauge_forward(s, GaugeField.zero(), P)
    for _ in range(5):
        s, _ = step(s, cfg, P)
        c = complex_step(c, cfg, P)
        assert gauge_backward(c, None, P).max_diff(s) <= 1e-12


def test_constant_gauges_agree_after_100_steps():
    s = smooth_state(16, 1.6)
    chis = [GaugeField.zero(), GaugeField.constant(0.9)]
    _, rows = dual_run(s, chis, StepConfig(dt=1e-3), P, 100)
    last = rows[-1]
    assert last["step"] == 100
    assert max(v for k, v in last.items() if k not in ("step", "t")) <= 1e-10


def test_varying_gauge_discrepancy_is_second_order():
    # centred stencils are not gauge covariant; the dual-run mismatch is a
    # truncation error that vanishes as h^2
    errs = []
    for n in (32, 64):
        s = smooth_state(n)
        chis = [GaugeField.zero(), GaugeField.cosine(0.3, L)]
        _, rows = dual_run(s, chis, StepConfig(dt=1e-3), P, 10)
        errs.append(max(rows[-1][k] for k in ("phi2", "v_s", "v_n", "rho", "theta")))
    assert errs[0] / errs[1] == pytest.approx(4.0, abs=1.0)
