"""Homogeneous relaxation of the order parameter and the critical superflow.

A uniform sample relaxes to the closed-form stationary phase; adding a
superflow past the critical speed drives it normal.
"""
import numpy as np

from heliumgl import Grid, ModelParams, StepConfig, equilibrium_phase, integrate, new_state

P = ModelParams()
pins = {"theta", "v_s", "v_n", "p", "rho"}   # keep only phi dynamic


def uniform(phi0, theta, vs2=0.0):
    return new_state(Grid.line(4, 0.4), {"phi": phi0, "theta": theta,
                                         "v_s": np.array([np.sqrt(vs2), 0.0, 0.0])})


# relaxation slows near the line, so the middle case lags after 5 tau
for t_end in (5 * P.tau, 40 * P.tau):
    cfg = StepConfig(dt=5e-3, t_end=t_end, pinned=pins, diagnostics=False)
    for theta in (1.0, 1.8, 2.5):
        out, _ = integrate(uniform(0.2, theta), cfg, P)
        print(f"theta={theta} t={t_end:g}: phi={out.phi.mean():.6f}  "
              f"stationary={equilibrium_phase(theta, 0.0, 0.0, 0.0, P):.6f}")

# superflow eats the margin: normal once |v_s|^2 >= theta_lambda - theta
print("critical |v_s|^2 at theta=1.5:", P.theta_lambda - 1.5)
cfg = StepConfig(dt=0.1, t_end=200.0, pinned=pins, diagnostics=False)
for vs2 in (0.3, 0.6, 0.7):
    out, _ = integrate(uniform(0.5, 1.5, vs2), cfg, P)
    print(f"|v_s|^2={vs2}: phi={out.phi.mean():.4f}")
