"""Open-loop input design for eps y'' = 2 y + 0.5 sin(y) + u(t) with output v = y.

Choose u so the slow dynamics sit exactly on the desired output v0(t) = t^2;
the fast dynamics then only add boundary layers and an O(eps) offset.
"""

# %%
import json
from pathlib import Path

import numpy as np

from nonlocal_sps import exprlang as el
from nonlocal_sps.control import (closed_loop_problem, load_plant, output_error_bound,
                                  u0_expr)
from nonlocal_sps.reference import solve_bvp3

HERE = Path(__file__).parent
plant = load_plant(json.loads((HERE / "problems" / "plant.json").read_text()))
print("u0(t) =", el.to_string(u0_expr(plant, "t^2")))

# %%
print("\n   eps      tracking error on [0.1, 0.4]   bound")
for eps in (1e-2, 1e-3, 1e-4):
    sol = solve_bvp3(closed_loop_problem(plant, "t^2", eps), 512)
    inner = (sol.t >= 0.1) & (sol.t <= 0.4)
    dev = np.max(np.abs(sol.y[inner] - sol.t[inner] ** 2))
    print(f"{eps:7.0e}   {dev:12.3e}                 {output_error_bound(plant, 't^2', eps).bound:9.3e}")
