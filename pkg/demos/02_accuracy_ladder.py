"""How fast does the closed-form approximation approach the true solution?

We shrink eps by factors of ten and measure E(eps) = max |y_ref - y_tilde|.
The envelope inequalities hold at every node, but E levels off near 0.038
instead of falling like eps. The last cell explains why.
"""

# %%
import json
from pathlib import Path

import numpy as np

from nonlocal_sps import approximation, load_problem, solve_bvp3
from nonlocal_sps.reference import compare

HERE = Path(__file__).parent
p = load_problem(json.loads((HERE / "problems" / "P1.json").read_text()))

# %%
rows = []
for eps in (1e-2, 1e-3, 1e-4, 1e-5):
    sol = solve_bvp3(p, 1024, eps)
    m = compare(sol, approximation.build(p, eps))
    rows.append((eps, m.max_err, m.interior_max_err, m.envelope_violations, sol.tube_violations))

print("   eps       E(eps)   interior   envelope-viol  tube-viol")
for eps, E, Ei, nv, nt in rows:
    print(f"{eps:7.0e}  {E:9.3e}  {Ei:9.3e}  {nv:8d}  {nt:10d}")
print("ratios:", [f"{b[1] / a[1]:.3f}" for a, b in zip(rows, rows[1:])])

# %% [markdown]
# The left layer of the true solution decays at rate sqrt((-k + f_y)/eps)
# with f_y = 2y close to 0 at t = 0, i.e. sqrt(2/eps). The layer function
# decays at sqrt(m/eps) with m = -k - lambda = 0.4. In the stretched variable
# x = t sqrt(m/eps) the two profiles are e^{-x} and e^{-sqrt(5) x}; their gap
# does not depend on eps.

# %%
x = np.linspace(0, 10, 100001)
gap = np.max(np.exp(-x) - np.exp(-np.sqrt(5) * x))
A = abs(np.sqrt(3) / 2 - 1)
print(f"\n|A| * max(e^-x - e^-sqrt5 x) = {A:.4f} * {gap:.4f} = {A * gap:.4f}")
print(f"measured E at the smallest eps = {rows[-1][1]:.4f}")
