"""Where does the lambda line sit, and how does pressure tilt it?

Sweeps the (theta, p) plane for a few couplings and prints the extracted
transition line next to the straight line it should follow.
"""
import numpy as np

from heliumgl import ModelParams, sweep

theta = np.linspace(0.5, 3.0, 200)
press = np.linspace(0.0, 3.0, 50)

for lam in (0.0, 0.1, 0.5, 1.0):
    params = ModelParams(lam=lam)
    res = sweep(theta, press, params)
    ok = np.isfinite(res.theta_line)
    dev = np.max(np.abs(res.theta_line[ok] - (params.theta_lambda - lam * press[ok])))
    print(f"lambda={lam:<4} slope dp/dtheta={res.slope:9.4f}  max deviation={dev:.1e}  {res.message}")

# a superflow shifts the whole line to lower temperature by |v_s|^2
res = sweep(theta, press, ModelParams(lam=0.5), vs2=0.3)
print("with |v_s|^2 = 0.3, line at p=0:", res.theta_line[0])
