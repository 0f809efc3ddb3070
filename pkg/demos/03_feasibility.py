"""Which lambda make the quadratic problem eps y'' + k y = y^2 + u(t) admissible?

Five scalar conditions on lambda, the roots of the reduced equation and the
input u. For k = -2, u = t the admissible set is an interval with a closed
form lower end.
"""

# %%
import math

from nonlocal_sps import exprlang as el
from nonlocal_sps.quadratic import QuadraticInstance, check_conditions, lambda_interval

inst = QuadraticInstance(-2.0, el.parse("t"), 0.0, 0.25, 0.5)
lo, hi = lambda_interval(inst)
print(f"scan result:  ({lo:.6f}, {hi:.6f})")
print(f"closed form:  ({2 / (math.sqrt(2) + math.sqrt(3)) + 2 - math.sqrt(2):.6f}, 2)")

# %%
for lam in (1.0, 1.2, 1.25, 1.6, 1.99):
    rep = check_conditions(inst, lam)
    failed = [c for c, ok in rep.passed.items() if not ok]
    print(f"lambda = {lam:5.2f}:  {'all pass' if rep.ok else 'fails ' + ', '.join(failed)}"
          f"   (c5 margin {rep.margins['c5']:+.4f})")

# %% [markdown]
# A constant input removes the u-differences from the right-hand sides; an
# input that reaches k^2/4 leaves no real reduced solution at all.

# %%
for u in ("0", "0.5", "1 + t"):
    print(f"u = {u:6s} -> {lambda_interval(QuadraticInstance(-2.0, el.parse(u), 0, 0.25, 0.5))}")
