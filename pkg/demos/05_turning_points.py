"""Where does the solution of eps y'' = -f(y)/2 with y(0) = y(gamma) turn around?

Energy conservation makes the trajectory symmetric, so the turning point sits
at gamma/2 whatever eps is. A time-dependent control breaks the symmetry;
the scan below only measures the drift.
"""

# %%
import json
from pathlib import Path

from nonlocal_sps import exprlang as el
from nonlocal_sps.turning import (AutonomousProblem, exp_turning_time, shoot_bc,
                                  turning_scan, turning_time)

HERE = Path(__file__).parent
cfg = json.loads((HERE / "problems" / "exp.json").read_text())
gamma = cfg["gamma"]

print("   eps       y1          t* (RK4)        t* (quadrature)  t* (closed form)")
for eps in (1e-2, 1e-3, 1e-4):
    ap = AutonomousProblem(el.parse(cfg["f_tilde"]), cfg["y0"], None, gamma, 2 * gamma, eps)
    y1, t_star = shoot_bc(ap)
    ap1 = ap.with_slope(y1)
    print(f"{eps:7.0e}  {y1:9.5f}  {t_star:.12f}  {turning_time(ap1):.12f}  {exp_turning_time(ap1):.12f}")

# %%
rep = turning_scan("u*exp(y)", cfg["controls"], [1e-2, 1e-3], gamma, y0=cfg["y0"])
print("\ncontrol        eps     t*         drift")
for r in rep.rows:
    print(f"{r.control:12s} {r.epsilon:7.0e}  {r.t_star:.6f}  {r.drift:+.2e}")
