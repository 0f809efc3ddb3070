"""Open-loop input synthesis for the semilinear plant

    eps w' = -k y + f(y) + u(t),   y' = w,   v = g(y),

so that the measured output ``v`` follows a desired ``v0(t)`` up to O(eps).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping

import numpy as np
from scipy.optimize import brentq

from . import exprlang as el
from .exprlang import Expr
from .problem import DEFAULT_DELTA, Problem, tube_width

LIPSCHITZ_RANGE = (-50.0, 50.0)
LIPSCHITZ_SAMPLES = 20001
BRACKET = (-1e3, 1e3)


class PlantError(ValueError):
    pass


@dataclass(frozen=True)
class SemilinearPlant:
    k: float
    f: Expr  # in y
    lam: float
    a: float
    gamma: float
    b: float
    g: Expr = el.Var("y")
    g_inv: Expr | None = None  # in v
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if not self.k < 0:
            raise PlantError("k must be negative")
        if not (0 < self.lam < -self.k):
            raise PlantError("lambda must lie in (0, -k)")
        if not (self.a < self.gamma < self.b):
            raise PlantError("need a < gamma < b")
        if el.variables(self.f) - {"y"} or el.variables(self.g) - {"y"}:
            raise PlantError("f and g may only depend on y")
        if self.g_inv is not None and el.variables(self.g_inv) - {"v"}:
            raise PlantError("g_inv may only depend on v")

    @property
    def m(self) -> float:
        return -self.k - self.lam

    def g_fn(self, y):
        return el.compile_expr(self.g, ("y",))(y)

    def dg_fn(self, y):
        return el.compile_expr(el.diff(self.g, "y"), ("y",))(y)


def load_plant(doc: Mapping[str, Any]) -> SemilinearPlant:
    g_inv = doc.get("g_inv")
    return SemilinearPlant(
        k=float(doc["k"]), f=el.parse(doc["f"], ("y",)), lam=float(doc["lambda"]),
        a=float(doc["a"]), gamma=float(doc["gamma"]), b=float(doc["b"]),
        g=el.parse(doc.get("g", "y"), ("y",)),
        g_inv=None if g_inv is None else el.parse(g_inv, ("v",)),
        delta=float(doc.get("delta", DEFAULT_DELTA)),
    )


@dataclass(frozen=True)
class PlantCheck:
    g_monotone: bool
    g_increasing: bool
    max_abs_df: float
    lipschitz_ok: bool


def check_plant(plant: SemilinearPlant) -> PlantCheck:
    """Sample g' for a constant sign and |f'| <= lambda on [-50, 50].

    Sampling only; the condition is required on all of R.
    """
    y = np.linspace(*LIPSCHITZ_RANGE, LIPSCHITZ_SAMPLES)
    dg = plant.dg_fn(y)
    df = np.abs(el.compile_expr(el.diff(plant.f, "y"), ("y",))(y))
    worst = float(np.max(df))
    return PlantCheck(bool(np.all(dg > 0) or np.all(dg < 0)), bool(np.all(dg > 0)),
                      worst, worst <= plant.lam)


def g_inverse(plant: SemilinearPlant, v: float) -> float:
    """Solve ``g(y) = v``; uses ``g_inv`` when the plant provides it."""
    if plant.g_inv is not None:
        return el.evaluate(plant.g_inv, v=v)
    g = el.compile_expr(plant.g, ("y",))
    lo, hi = BRACKET
    glo, ghi = float(g(lo)) - v, float(g(hi)) - v
    if not (glo * ghi <= 0):
        raise PlantError(f"v={v!r} is outside the range of g on [{lo:g}, {hi:g}]")
    dg = el.compile_expr(el.diff(plant.g, "y"), ("y",))
    y = brentq(lambda s: float(g(s)) - v, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    # polish with Newton
    for _ in range(3):
        d = float(dg(y))
        if d == 0:
            break
        step = (float(g(y)) - v) / d
        y -= step
        if abs(step) <= 1e-13 * (1 + abs(y)):
            break
    return y


def eta0_expr(plant: SemilinearPlant, v0: Expr) -> Expr | None:
    """Symbolic ``g^{-1}(v0(t))`` when available (``g_inv`` given or g = y)."""
    if plant.g_inv is not None:
        return el.substitute(plant.g_inv, {"v": v0})
    if plant.g == el.Var("y"):
        return v0
    return None


def synthesize_input(plant: SemilinearPlant, v0: Expr | str
                     ) -> tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray]]:
    """Return ``(u0, eta0)`` with ``eta0 = g^{-1}(v0)`` and ``u0 = k eta0 - f(eta0)``."""
    v0 = el.as_expr(v0, ("t",))
    f = el.compile_expr(plant.f, ("y",))
    sym = eta0_expr(plant, v0)
    if sym is not None:
        eta_c = el.compile_expr(sym, ("t",))

        def eta0(t):
            return eta_c(np.asarray(t, dtype=float))
    else:
        v0_c = el.compile_expr(v0, ("t",))

        def eta0(t):
            t = np.asarray(t, dtype=float)
            vals = np.atleast_1d(v0_c(t))
            out = np.array([g_inverse(plant, float(x)) for x in vals.ravel()])
            return out.reshape(np.shape(t))

    def u0(t):
        e = eta0(t)
        return plant.k * e - f(e)

    return u0, eta0


def u0_expr(plant: SemilinearPlant, v0: Expr | str) -> Expr:
    """Symbolic control input; needs a symbolic inverse of g."""
    v0 = el.as_expr(v0, ("t",))
    eta = eta0_expr(plant, v0)
    if eta is None:
        raise PlantError("a symbolic input needs g_inv (or g = y)")
    return el.sub(el.mul(el.Const(plant.k), eta), el.substitute(plant.f, {"y": eta}))


def _eta0_dd(plant: SemilinearPlant, v0: Expr, eta0, t: np.ndarray) -> np.ndarray:
    sym = eta0_expr(plant, v0)
    if sym is not None:
        return el.compile_expr(el.diff(el.diff(sym, "t"), "t"), ("t",))(t)
    h = 1e-4 * (plant.b - plant.a)
    tc = np.clip(t, plant.a + h, plant.b - h)
    return (eta0(tc + h) - 2 * eta0(tc) + eta0(tc - h)) / h**2


def mu(plant: SemilinearPlant, eta0, grid: int = 2001, ny: int = 201) -> float:
    """``max |g'(y)|`` over the tube around ``eta0``."""
    t = np.linspace(plant.a, plant.b, grid)
    e = eta0(t)
    ea, eg, eb = (float(x) for x in eta0(np.array([plant.a, plant.gamma, plant.b])))
    shim = _TubeGeometry(plant.a, plant.b, plant.delta)
    d = tube_width(shim, t, ea, eg, eb)
    s = np.linspace(-1.0, 1.0, ny)
    y = e[:, None] + d[:, None] * s[None, :]
    return float(np.max(np.abs(plant.dg_fn(y))))


@dataclass(frozen=True)
class _TubeGeometry:
    a: float
    b: float
    delta: float


@dataclass(frozen=True)
class BoundReport:
    bound: float
    mu: float
    m: float
    max_abs_eta0_dd: float
    epsilon: float

    def as_dict(self) -> dict:
        return {"bound": self.bound, "mu": self.mu, "m": self.m,
                "max_abs_eta0_dd": self.max_abs_eta0_dd, "epsilon": self.epsilon}


def output_error_bound(plant: SemilinearPlant, v0: Expr | str, epsilon: float) -> BoundReport:
    """``mu * (eps / m) * max |eta0''|`` on [a, b]."""
    v0 = el.as_expr(v0, ("t",))
    _, eta0 = synthesize_input(plant, v0)
    t = np.linspace(plant.a, plant.b, 2001)
    dd = float(np.max(np.abs(_eta0_dd(plant, v0, eta0, t))))
    mu_val = mu(plant, eta0)
    return BoundReport(mu_val * epsilon / plant.m * dd, mu_val, plant.m, dd, epsilon)


def closed_loop_problem(plant: SemilinearPlant, v0: Expr | str, epsilon: float) -> Problem:
    """The three-point problem driven by the synthesised input.

    ``f(u, y) = f(y) + u`` with ``u = u0(t)`` and the reduced solution eta0.
    """
    v0 = el.as_expr(v0, ("t",))
    eta = eta0_expr(plant, v0)
    if eta is None:
        raise PlantError("closed-loop problem needs a symbolic inverse of g")
    return Problem(k=plant.k, a=plant.a, gamma=plant.gamma, b=plant.b,
                   f=el.add(plant.f, el.Var("u")), u=u0_expr(plant, v0), lam=plant.lam,
                   epsilon=epsilon, eta=eta, delta=plant.delta)


def infer_envelope_constant(plant: SemilinearPlant, v0: Expr | str) -> float:
    """``C = max |eta0''| / m`` of the closed-loop problem."""
    rep = output_error_bound(plant, v0, 1.0)
    return rep.max_abs_eta0_dd / plant.m


__all__ = [
    "SemilinearPlant", "load_plant", "check_plant", "g_inverse", "synthesize_input",
    "u0_expr", "output_error_bound", "closed_loop_problem", "BoundReport", "mu",
    "infer_envelope_constant", "PlantError",
]
