"""Feasibility conditions for the quadratic problem eps y'' + k y = y^2 + u(t).

The reduced equation ``y^2 - k y + u = 0`` has the roots ``(k +- iota)/2``
with ``iota(t) = sqrt(k^2 - 4 u(t))``; the branch ``(k + iota)/2`` is used.

Note: ``iota`` is a reconstruction. It reproduces ``eta = -1 + sqrt(1 - t)``
for ``k = -2, u = t`` and the closed-form lower end of the admissible
lambda range for that instance; it has not been checked on other data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import exprlang as el
from .exprlang import Expr

GRID = 2001
LAMBDA_SCAN = 4001
LAMBDA_RESOLUTION = 1e-6


@dataclass(frozen=True)
class QuadraticInstance:
    k: float
    u: Expr
    a: float
    gamma: float
    b: float

    def __post_init__(self):
        if not self.k < 0:
            raise ValueError("k must be negative")
        if not (self.a < self.gamma < self.b):
            raise ValueError("need a < gamma < b")

    def u_of(self, t):
        return el.compile_expr(self.u, ("t",))(np.asarray(t, dtype=float))


def from_problem_doc(doc) -> QuadraticInstance:
    return QuadraticInstance(float(doc["k"]), el.parse(str(doc["u"]), ("t",)),
                             float(doc["a"]), float(doc["gamma"]), float(doc["b"]))


def iota(inst: QuadraticInstance, t):
    disc = inst.k**2 - 4.0 * inst.u_of(t)
    if np.any(disc < 0):
        raise ValueError("negative discriminant k^2 - 4u(t): no real reduced solution")
    return np.sqrt(disc)


def reduced_solution(inst: QuadraticInstance, t):
    return 0.5 * (inst.k + iota(inst, t))


@dataclass
class ConditionReport:
    lam: float
    passed: dict[str, bool] = field(default_factory=dict)
    margins: dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "passed": dict(self.passed),
                "margins": dict(self.margins), "all": self.ok}


def check_conditions(inst: QuadraticInstance, lam: float) -> ConditionReport:
    """Evaluate (c1)-(c5); margins are positive when a condition holds."""
    k = inst.k
    t = np.linspace(inst.a, inst.b, GRID)
    u = inst.u_of(t)
    lower = 0.25 * (k**2 - (lam - k) ** 2)
    upper = 0.25 * (k**2 - (lam + k) ** 2)
    c1 = float(min(np.min(u - lower), np.min(upper - u)))

    ua, ug, ub = (float(x) for x in inst.u_of(np.array([inst.a, inst.gamma, inst.b])))
    disc = np.array([k**2 - 4 * ua, k**2 - 4 * ug, k**2 - 4 * ub])
    rep = ConditionReport(lam)
    rep.margins["c1"] = c1
    if np.any(disc < 0):
        for name in ("c2", "c3", "c4", "c5"):
            rep.margins[name] = -math.inf
    else:
        ia, ig, ib = (float(x) for x in np.sqrt(disc))
        du_left = abs(ug - ua)
        du_right = abs(ub - ug)
        rep.margins["c2"] = 0.125 * (lam - k - ia) * (ia + ig) - du_left
        rep.margins["c3"] = 0.125 * (lam - k - ib) * (ib + ig) - du_right
        rep.margins["c4"] = 0.125 * (lam + k + ia) * (ia + ig) - du_left
        rep.margins["c5"] = 0.125 * (lam + k + ib) * (ib + ig) - du_right
    rep.passed = {name: bool(val > 0) for name, val in rep.margins.items()}
    return rep


def _bisect(inst: QuadraticInstance, good: float, bad: float) -> float:
    while abs(good - bad) > LAMBDA_RESOLUTION:
        mid = 0.5 * (good + bad)
        if check_conditions(inst, mid).ok:
            good = mid
        else:
            bad = mid
    return 0.5 * (good + bad)


def lambda_interval(inst: QuadraticInstance) -> tuple[float, float] | None:
    """Longest sub-interval of (0, -k) on which all conditions hold.

    A scan locates the passing runs, bisection refines each interior end to
    1e-6. Ends that reach the open domain boundary are reported as 0 or -k.
    Returns ``None`` when no lambda passes.
    """
    top = -inst.k
    lams = np.linspace(0.0, top, LAMBDA_SCAN)[1:-1]
    ok = np.array([check_conditions(inst, float(x)).ok for x in lams])
    if not ok.any():
        return None
    best = None
    i = 0
    while i < len(ok):
        if ok[i]:
            j = i
            while j + 1 < len(ok) and ok[j + 1]:
                j += 1
            if best is None or j - i > best[1] - best[0]:
                best = (i, j)
            i = j + 1
        else:
            i += 1
    i, j = best
    lo = 0.0 if i == 0 else _bisect(inst, float(lams[i]), float(lams[i - 1]))
    hi = top if j == len(ok) - 1 else _bisect(inst, float(lams[j]), float(lams[j + 1]))
    return lo, hi
