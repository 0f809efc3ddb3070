"""Boundary layers of a three-point problem.

    eps y'' - 2 y = y^2 + t,   y(0) = y(1/4) = y(1/2)

The reduced solution eta(t) = -1 + sqrt(1 - t) does not satisfy the nonlocal
condition, so the solution jumps away from it in thin layers at both ends.
Run from the repository root:  python demos/01_boundary_layers.py
"""

# %%
import json
from pathlib import Path

import numpy as np

from nonlocal_sps import approximation, layers, load_problem, solve_bvp3

HERE = Path(__file__).parent
p = load_problem(json.loads((HERE / "problems" / "P1.json").read_text()))
eps = 1e-4
print(f"m = -k - lambda = {p.m:g},  layer rate s = sqrt(m/eps) = {np.sqrt(p.m / eps):.2f}")

# %% [markdown]
# The reference solution comes from Newton on a Shishkin mesh; the closed-form
# approximation needs nothing but eta and two exponential layer functions.

# %%
sol = solve_bvp3(p, 512, eps)
appr = approximation.build(p, eps)
print(f"Newton iterations {sol.newton_iters}, residual {sol.residual_norm:.1e}")
print(f"y(0), y(1/4), y(1/2) = {sol.y[0]:.6f}, {sol.y[sol.mesh.gamma_index]:.6f}, {sol.y[-1]:.6f}")
print(f"slopes at the ends: {sol.w[0]:.1f}, {sol.w[-1]:.1f}")

# %%
print("\n     t        eta      y_ref    y_tilde     zeta   zeta_hat")
for t in (0.0, 0.002, 0.01, 0.05, 0.125, 0.25, 0.375, 0.45, 0.49, 0.498, 0.5):
    i = int(np.argmin(np.abs(sol.t - t)))
    tt = np.array([sol.t[i]])
    print(f"{sol.t[i]:7.4f} {appr.path.eta(tt)[0]:9.5f} {sol.y[i]:9.5f} {appr.y_tilde(tt)[0]:9.5f}"
          f" {layers.zeta(appr.layers, tt)[0]:9.5f} {layers.zeta_hat(appr.layers, tt)[0]:9.5f}")

# %% [markdown]
# Away from the ends the solution hugs eta to within a few eps. The
# approximation reproduces the nonlocal condition exactly for every eps.

# %%
inner = (sol.t >= 0.05) & (sol.t <= 0.45)
print(f"\nmax |y_ref - eta| on [0.05, 0.45] = {np.max(np.abs(sol.y - appr.path.eta(sol.t))[inner]) / eps:.2f} eps")
ends = appr.y_tilde(np.array([0.0, 0.25, 0.5]))
print(f"y_tilde at a, gamma, b: {ends}")

# %%
try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt is not None and __name__ == "__main__":
    plt.plot(sol.t, sol.y, label="reference")
    plt.plot(sol.t, appr.y_tilde(sol.t), "--", label="approximation")
    plt.plot(sol.t, appr.path.eta(sol.t), ":", label="eta")
    plt.legend()
    plt.savefig(HERE / "boundary_layers.png", dpi=120)
    print("wrote", HERE / "boundary_layers.png")
