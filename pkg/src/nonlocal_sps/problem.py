"""Three-point singularly perturbed problems and their reduced solution.

A :class:`Problem` describes

    eps * y'' + k * y = f(u(t), y),      y(a) = y(gamma) = y(b),

with ``k < 0``. The reduced (eps = 0) solution ``eta`` solves
``k * eta = f(u(t), eta)``; it is either given as an expression or found by
Newton continuation from ``eta_seed``.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from . import exprlang as el
from .exprlang import Expr

DEFAULT_DELTA = 0.05
ETA_GRID = 2001
A2_GRID = (2001, 201)


class ProblemError(ValueError):
    """Invalid problem definition."""


class ReducedProblemError(ArithmeticError):
    """The reduced equation could not be solved."""


@dataclass(frozen=True)
class Problem:
    k: float
    a: float
    gamma: float
    b: float
    f: Expr
    u: Expr
    lam: float
    epsilon: float | None = None
    g: Expr = el.Var("y")
    eta: Expr | None = None
    eta_seed: float | None = None
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if not (self.a < self.gamma < self.b):
            raise ProblemError(
                f"interval ordering violated: need a < gamma < b, got "
                f"{self.a}, {self.gamma}, {self.b}")
        if not self.k < 0:
            raise ProblemError(f"k must be negative, got {self.k}")
        if not (0 < self.lam < -self.k):
            raise ProblemError(f"lambda must lie in (0, -k) = (0, {-self.k}), got {self.lam}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ProblemError(f"epsilon must be positive, got {self.epsilon}")
        if not self.delta > 0:
            raise ProblemError(f"delta must be positive, got {self.delta}")
        if self.eta is None and self.eta_seed is None:
            raise ProblemError("either 'eta' or 'eta_seed' is required")
        for name, expr, allowed in (("f", self.f, {"u", "y"}), ("u", self.u, {"t"}),
                                    ("g", self.g, {"y"})):
            extra = el.variables(expr) - allowed
            if extra:
                raise ProblemError(f"{name} uses unknown variable(s) {sorted(extra)}")
        if self.eta is not None and el.variables(self.eta) - {"t"}:
            raise ProblemError("eta may only depend on t")

    @property
    def m(self) -> float:
        """Layer rate constant ``-k - lambda``."""
        return -self.k - self.lam

    def with_epsilon(self, epsilon: float) -> "Problem":
        return dataclasses.replace(self, epsilon=epsilon)

    def require_epsilon(self) -> float:
        if self.epsilon is None:
            raise ProblemError("epsilon is not set")
        return self.epsilon

    # compiled callables; cached per instance
    @functools.cached_property
    def _fns(self) -> dict[str, Callable]:
        fu = el.diff(self.f, "u")
        fy = el.diff(self.f, "y")
        ut = el.diff(self.u, "t")
        return {
            "f": el.compile_expr(self.f, ("u", "y")),
            "u": el.compile_expr(self.u, ("t",)),
            "fy": el.compile_expr(fy, ("u", "y")),
            "fu": el.compile_expr(fu, ("u", "y")),
            "fuu": el.compile_expr(el.diff(fu, "u"), ("u", "y")),
            "fuy": el.compile_expr(el.diff(fu, "y"), ("u", "y")),
            "fyy": el.compile_expr(el.diff(fy, "y"), ("u", "y")),
            "du": el.compile_expr(ut, ("t",)),
            "ddu": el.compile_expr(el.diff(ut, "t"), ("t",)),
        }

    def f_of(self, t, y):
        """``f(u(t), y)``, vectorised."""
        return self._fns["f"](self._fns["u"](t), y)

    def fy_of(self, t, y):
        """``df/dy`` at ``(u(t), y)``, vectorised."""
        return self._fns["fy"](self._fns["u"](t), y)

    def u_of(self, t):
        return self._fns["u"](t)


def _number(doc: Mapping[str, Any], key: str, default: Any = ...) -> float:
    if key not in doc:
        if default is ...:
            raise ProblemError(f"missing key {key!r}")
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemError(f"{key!r} must be a number, got {value!r}")
    return float(value)


def load_problem(doc: Mapping[str, Any], epsilon: float | None = None,
                 lam: float | None = None, delta: float | None = None) -> Problem:
    """Build a validated :class:`Problem` from a JSON-style mapping.

    Keys: ``k, a, gamma, b, f, u, lambda`` (required) and ``g, eta, eta_seed,
    delta, epsilon`` (optional). Keyword overrides win over the document.
    Expression parse errors propagate as :class:`exprlang.ExprError`.
    """
    for key in ("f", "u"):
        if key not in doc:
            raise ProblemError(f"missing key {key!r}")
    eta = doc.get("eta")
    eps = epsilon if epsilon is not None else doc.get("epsilon")
    return Problem(
        k=_number(doc, "k"),
        a=_number(doc, "a"),
        gamma=_number(doc, "gamma"),
        b=_number(doc, "b"),
        f=el.parse(doc["f"], ("u", "y")),
        u=el.parse(str(doc["u"]), ("t",)),
        g=el.parse(doc.get("g", "y"), ("y",)),
        eta=None if eta is None else el.parse(str(eta), ("t",)),
        eta_seed=None if doc.get("eta_seed") is None else _number(doc, "eta_seed"),
        lam=lam if lam is not None else _number(doc, "lambda"),
        delta=delta if delta is not None else _number(doc, "delta", DEFAULT_DELTA),
        epsilon=None if eps is None else float(eps),
    )


# --------------------------------------------------------------------------- reduced solution


def _newton_root(p: Problem, t: float, y: float, tol: float = 1e-12,
                 maxiter: int = 50) -> float:
    for _ in range(maxiter):
        g = p.k * y - float(p.f_of(t, y))
        dg = p.k - float(p.fy_of(t, y))
        if not math.isfinite(g) or not math.isfinite(dg) or dg == 0.0:
            break
        step = g / dg
        y -= step
        if abs(step) <= tol * (1.0 + abs(y)):
            if abs(p.k * y - float(p.f_of(t, y))) <= 1e-10 * (1.0 + abs(y)):
                return y
    raise ReducedProblemError(f"reduced problem has no solution near t={t!r} "
                              f"(Newton did not converge)")


@functools.lru_cache(maxsize=64)
def _continuation(p: Problem) -> tuple[np.ndarray, np.ndarray]:
    ts = np.linspace(p.a, p.b, ETA_GRID)
    ys = np.empty_like(ts)
    y = float(p.eta_seed)
    for i, t in enumerate(ts):
        y = _newton_root(p, float(t), y)
        ys[i] = y
    return ts, ys


def resolve_eta(p: Problem, t: float) -> float:
    """Reduced solution ``eta(t)``.

    Uses the ``eta`` expression when present. Otherwise Newton iteration on
    ``k*y - f(u(t), y) = 0`` continued along a grid from ``eta_seed`` at
    ``t = a``, so the returned root is the branch connected to the seed.
    """
    if not (p.a <= t <= p.b):
        raise ValueError(f"t={t} outside [{p.a}, {p.b}]")
    if p.eta is not None:
        return el.evaluate(p.eta, t=t)
    ts, ys = _continuation(p)
    i = int(np.argmin(np.abs(ts - t)))
    return _newton_root(p, t, float(ys[i]))


@dataclass(frozen=True)
class ReducedPath:
    """``eta`` and its first two derivatives as vectorised callables."""

    eta: Callable[[np.ndarray], np.ndarray]
    d_eta: Callable[[np.ndarray], np.ndarray]
    dd_eta: Callable[[np.ndarray], np.ndarray]
    max_abs_eta_dd: float
    method: str = field(default="symbolic")


def _implicit_derivatives(p: Problem, t: np.ndarray, y: np.ndarray):
    fn = p._fns
    u = fn["u"](t)
    du, ddu = fn["du"](t), fn["ddu"](t)
    fu, fy = fn["fu"](u, y), fn["fy"](u, y)
    denom = p.k - fy
    if np.any(denom == 0.0) or not np.all(np.isfinite(denom)):
        raise ReducedProblemError("k - df/dy vanishes on the reduced path (A2 violated)")
    d1 = fu * du / denom
    d2 = (fn["fuu"](u, y) * du**2 + 2.0 * fn["fuy"](u, y) * du * d1
          + fn["fyy"](u, y) * d1**2 + fu * ddu) / denom
    return d1, d2


def eta_derivatives(p: Problem) -> ReducedPath:
    """Reduced solution with derivatives and ``max |eta''|`` on [a, b].

    Symbolic differentiation when ``eta`` is an expression, otherwise implicit
    differentiation of ``k*eta = f(u, eta)``; falls back to central
    differences if the implicit formulas hit a domain error.
    """
    grid = np.linspace(p.a, p.b, ETA_GRID)
    if p.eta is not None:
        e0 = el.compile_expr(p.eta, ("t",))
        d1 = el.diff(p.eta, "t")
        e1 = el.compile_expr(d1, ("t",))
        e2 = el.compile_expr(el.diff(d1, "t"), ("t",))
        try:
            with np.errstate(all="raise"):
                e0(grid), e1(grid)
                dd = np.abs(e2(grid))
        except FloatingPointError as exc:
            raise ReducedProblemError(f"eta or its derivatives are singular on [a, b] ({exc})") from None
        path = ReducedPath(e0, e1, e2, float(dd.max()), "symbolic")
    else:
        def eta_fn(t):
            t = np.asarray(t, dtype=float)
            return np.vectorize(lambda s: resolve_eta(p, float(s)), otypes=[float])(t)

        try:
            with np.errstate(all="raise"):
                _implicit_derivatives(p, grid, eta_fn(grid))

            def d_fn(t):
                t = np.asarray(t, dtype=float)
                return _implicit_derivatives(p, t, eta_fn(t))[0]

            def dd_fn(t):
                t = np.asarray(t, dtype=float)
                return _implicit_derivatives(p, t, eta_fn(t))[1]
            method = "implicit"
        except FloatingPointError:
            h = 1e-4 * (p.b - p.a)

            def clip(t):
                return np.clip(t, p.a + h, p.b - h)

            def d_fn(t):
                t = clip(np.asarray(t, dtype=float))
                return (eta_fn(t + h) - eta_fn(t - h)) / (2 * h)

            def dd_fn(t):
                t = clip(np.asarray(t, dtype=float))
                return (eta_fn(t + h) - 2 * eta_fn(t) + eta_fn(t - h)) / h**2
            method = "finite-difference"
        path = ReducedPath(eta_fn, d_fn, dd_fn, float(np.max(np.abs(dd_fn(grid)))), method)
    residual = p.k * path.eta(grid) - p.f_of(grid, path.eta(grid))
    bad = np.abs(residual) > 1e-10 * (1.0 + np.abs(path.eta(grid)))
    if np.any(bad):
        t_bad = float(grid[np.argmax(bad)])
        raise ReducedProblemError(f"eta does not solve the reduced equation at t={t_bad}")
    return path


@functools.lru_cache(maxsize=64)
def reduced_path(p: Problem) -> ReducedPath:
    """Cached :func:`eta_derivatives`."""
    return eta_derivatives(p)


def layer_constant(p: Problem) -> float:
    """``C = max |eta''| / m``."""
    return reduced_path(p).max_abs_eta_dd / p.m


# --------------------------------------------------------------------------- tube and A2


def tube_width(p: Problem, t, eta_a: float, eta_gamma: float, eta_b: float):
    """Half-width ``d(t)`` of the tube around ``eta``.

    Widened by ``|eta(gamma) - eta(a)|`` on ``[a, a + delta/2]`` and by
    ``|eta(b) - eta(gamma)|`` on ``[b - delta/2, b]``, equal to ``delta`` on
    ``[a + delta, b - delta]``, linear in between. Where the end pieces
    overlap (large delta) the larger width is taken.
    """
    t = np.asarray(t, dtype=float)
    dlt = p.delta
    left = abs(eta_gamma - eta_a) + dlt
    right = abs(eta_b - eta_gamma) + dlt
    xl = np.clip((t - p.a - dlt / 2) / (dlt / 2), 0.0, 1.0)
    xr = np.clip((p.b - dlt / 2 - t) / (dlt / 2), 0.0, 1.0)
    return np.maximum(left + (dlt - left) * xl, right + (dlt - right) * xr)


@dataclass(frozen=True)
class A2Report:
    passed: bool
    max_abs_fy: float
    lam: float
    delta: float
    argmax: tuple[float, float]


def verify_A2(p: Problem) -> A2Report:
    """Sample ``|df/dy|`` over the tube on a 2001 x 201 grid.

    This is a dense-sampling check, not a proof.
    """
    path = reduced_path(p)
    nt, ny = A2_GRID
    t = np.linspace(p.a, p.b, nt)
    eta = path.eta(t)
    ea, eg, eb = (float(path.eta(np.array([x]))[0]) for x in (p.a, p.gamma, p.b))
    d = tube_width(p, t, ea, eg, eb)
    s = np.linspace(-1.0, 1.0, ny)
    tt = t[:, None] * np.ones_like(s)
    yy = eta[:, None] + d[:, None] * s[None, :]
    with np.errstate(all="ignore"):
        fy = np.abs(p.fy_of(tt, yy))
    fy = np.where(np.isfinite(fy), fy, np.inf)
    idx = np.unravel_index(int(np.argmax(fy)), fy.shape)
    worst = float(fy[idx])
    return A2Report(worst <= p.lam, worst, p.lam, p.delta,
                    (float(tt[idx]), float(yy[idx])))
