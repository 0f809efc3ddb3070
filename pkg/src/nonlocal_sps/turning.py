"""Turning points of eps y'' + f~(u, y)/2 = 0 with f~ > 0.

Without a reduced solution the layer machinery does not apply. For the
autonomous case the energy identity

    eps y'^2 + F(y) = c1,     F' = f~,

gives the time map ``dt = -2 sqrt(eps) dz / f~(F^{-1}(c1 - z^2))`` with
``z = sqrt(eps) |y'|``, so the turning point (y' = 0) is at

    t* = 2 sqrt(eps) * int_0^{sqrt(eps) y1} dz / f~(F^{-1}(c1 - z^2)).

For ``f~ = e^y`` the solution is ``y = ln c1 - 2 ln cosh(theta/2)`` with
``theta = sqrt(c1/eps) (t + c2)``, ``c2 = -t*``. The prefactor is
``2 sqrt(eps)`` and the rate ``sqrt(c1/eps)``: these are what the energy
identity and the constant-f~ parabola give.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import exprlang as el
from .exprlang import Expr

log = logging.getLogger(__name__)

EXP_Y = el.Unary("exp", el.Var("y"))
QUAD_RTOL = 1e-10
MAX_DOUBLINGS = 60


class TurningPointError(ArithmeticError):
    pass


@dataclass(frozen=True)
class AutonomousProblem:
    f_tilde: Expr  # in y
    y0: float
    y1: float | None
    gamma: float
    b: float
    epsilon: float

    def __post_init__(self):
        if el.variables(self.f_tilde) - {"y"}:
            raise ValueError("f_tilde may only depend on y (fold the constant control in)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.gamma < self.b:
            raise ValueError("need 0 < gamma < b")
        if self.y1 is not None and not self.y1 > 0:
            raise ValueError("y1 must be positive (a non-positive slope cannot meet y(0) = y(gamma))")

    def with_slope(self, y1: float) -> "AutonomousProblem":
        return AutonomousProblem(self.f_tilde, self.y0, y1, self.gamma, self.b, self.epsilon)

    def require_slope(self) -> float:
        if self.y1 is None:
            raise ValueError("initial slope y1 is not set")
        return self.y1


# --------------------------------------------------------------------------- energy


@dataclass
class EnergyFunctional:
    """Antiderivative ``F`` of ``f~`` and its inverse.

    ``F = e^y`` when ``f~`` is exactly ``exp(y)``; otherwise
    ``F(y) = int_{y0}^{y} f~``, so ``F(y0) = 0``. Only differences of F enter
    the time map, so the anchor does not matter.
    """

    f: Callable[[float], float]
    F: Callable[[float], float]
    F_inv: Callable[[float], float]
    anchor: float
    closed_form: bool

    def c1(self, epsilon: float, y0: float, y1: float) -> float:
        return epsilon * y1**2 + self.F(y0)


def energy_functional(f_tilde: Expr, y0: float, numeric: bool = False) -> EnergyFunctional:
    """Build ``F`` and ``F^{-1}``; ``numeric=True`` skips the exp closed form."""
    f = el.compile_expr(f_tilde, ("y",), backend="math")
    if f_tilde == EXP_Y and not numeric:
        return EnergyFunctional(f, math.exp, math.log, y0, True)

    def F(y: float) -> float:
        val, _ = quad(f, y0, y, epsabs=1e-15, epsrel=1e-13, limit=200)
        return val

    def F_inv(w: float) -> float:
        # F is increasing; bracket then Newton-polish with F' = f
        fy0 = f(y0)
        if not fy0 > 0:
            raise TurningPointError(f"f~({y0}) = {fy0} is not positive")
        step = max(abs(w) / fy0, 1e-3)
        lo, hi = y0, y0
        if w >= 0:
            hi = y0 + step
            while F(hi) < w:
                lo, hi = hi, hi + 2 * (hi - y0)
        else:
            lo = y0 - step
            while F(lo) > w:
                lo, hi = lo - 2 * (y0 - lo), lo
        y = brentq(lambda s: F(s) - w, lo, hi, xtol=1e-14, rtol=1e-15)
        for _ in range(3):
            d = f(y)
            if not d > 0:
                raise TurningPointError(f"f~ is not positive at y={y}")
            dy = (F(y) - w) / d
            y -= dy
            if abs(dy) <= 1e-15 * (1 + abs(y)):
                break
        return y

    return EnergyFunctional(f, F, F_inv, y0, False)


def first_integral(ap: AutonomousProblem, y, yp, energy: EnergyFunctional | None = None):
    """``eps yp^2 + F(y)``; constant (= c1) along exact trajectories."""
    en = energy or energy_functional(ap.f_tilde, ap.y0)
    F = np.vectorize(en.F, otypes=[float])
    return ap.epsilon * np.asarray(yp) ** 2 + F(np.asarray(y, dtype=float))


# --------------------------------------------------------------------------- time map


def turning_time(ap: AutonomousProblem, energy: EnergyFunctional | None = None) -> float:
    """Turning time from the energy time map by adaptive Gauss-Kronrod quadrature."""
    en = energy or energy_functional(ap.f_tilde, ap.y0)
    eps = ap.epsilon
    y1 = ap.require_slope()
    c1 = en.c1(eps, ap.y0, y1)

    def integrand(z: float) -> float:
        fy = en.f(en.F_inv(c1 - z * z))
        if not fy > 0:
            raise TurningPointError(f"f~ is not positive (value {fy}) on the trajectory")
        return 1.0 / fy

    val, err = quad(integrand, 0.0, math.sqrt(eps) * y1, epsabs=0.0, epsrel=QUAD_RTOL,
                    limit=200)
    if not math.isfinite(val) or err > 10 * QUAD_RTOL * abs(val) + 1e-300:
        raise TurningPointError(f"quadrature did not converge (estimate {val}, error {err})")
    return 2.0 * math.sqrt(eps) * val


def exp_constants(ap: AutonomousProblem) -> tuple[float, float]:
    """``(c1, c2)`` for ``f~ = e^y``."""
    eps, y1 = ap.epsilon, ap.require_slope()
    c1 = eps * y1**2 + math.exp(ap.y0)
    rc, p = math.sqrt(c1), math.sqrt(eps) * y1
    c2 = -math.sqrt(eps / c1) * math.log((rc + p) / (rc - p))
    return c1, c2


def exp_turning_time(ap: AutonomousProblem) -> float:
    """Closed-form turning time ``sqrt(eps/c1) ln((sqrt c1 + sqrt(eps) y1)/(sqrt c1 - sqrt(eps) y1))``."""
    return -exp_constants(ap)[1]


def _logcosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)


def exp_exact_solution(ap: AutonomousProblem, t, derivatives: bool = False):
    """Exact IVP solution for ``f~ = e^y``; optionally also ``y'`` and ``y''``."""
    if ap.f_tilde != EXP_Y:
        raise ValueError("closed form only available for f~ = exp(y)")
    c1, c2 = exp_constants(ap)
    rate = math.sqrt(c1 / ap.epsilon)
    half = 0.5 * rate * (np.asarray(t, dtype=float) + c2)
    y = math.log(c1) - 2.0 * _logcosh(half)
    if not derivatives:
        return y
    yp = -rate * np.tanh(half)
    ypp = -0.5 * rate**2 * np.exp(-2.0 * _logcosh(half))
    return y, yp, ypp


# --------------------------------------------------------------------------- IVP


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    yp: np.ndarray


def default_step(epsilon: float, gamma: float) -> float:
    return min(math.sqrt(epsilon), gamma) / 200.0


def rk4(rhs: Callable[[float, float], float], epsilon: float, y0: float, y1: float,
        t_end: float, h: float) -> Trajectory:
    """Classical RK4 for ``eps y'' = -rhs(t, y) / 2`` on ``[0, t_end]``.

    The step is shrunk so that an integer number of steps lands on ``t_end``.
    """
    n = max(1, math.ceil(t_end / h - 1e-9))
    h = t_end / n
    c = -0.5 / epsilon
    ts = np.linspace(0.0, t_end, n + 1)
    ys = np.empty(n + 1)
    ps = np.empty(n + 1)
    y, p = y0, y1
    ys[0], ps[0] = y, p
    for i in range(n):
        t = ts[i]
        k1y, k1p = p, c * rhs(t, y)
        k2y, k2p = p + 0.5 * h * k1p, c * rhs(t + 0.5 * h, y + 0.5 * h * k1y)
        k3y, k3p = p + 0.5 * h * k2p, c * rhs(t + 0.5 * h, y + 0.5 * h * k2y)
        k4y, k4p = p + h * k3p, c * rhs(t + h, y + h * k3y)
        y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
        p += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        ys[i + 1], ps[i + 1] = y, p
    return Trajectory(ts, ys, ps)


def integrate(ap: AutonomousProblem, t_end: float | None = None, h: float | None = None
              ) -> Trajectory:
    f = el.compile_expr(ap.f_tilde, ("y",), backend="math")
    return rk4(lambda _t, y: f(y), ap.epsilon, ap.y0, ap.require_slope(),
               ap.gamma if t_end is None else t_end,
               default_step(ap.epsilon, ap.gamma) if h is None else h)


def locate_turning_point(traj: Trajectory, rhs: Callable[[float, float], float],
                         epsilon: float) -> float:
    """First zero of y' on the trajectory, refined by cubic Hermite interpolation."""
    sign = np.sign(traj.yp)
    idx = np.nonzero((sign[:-1] > 0) & (sign[1:] <= 0))[0]
    if len(idx) == 0:
        raise TurningPointError("y' has no sign change on the integrated interval")
    i = int(idx[0])
    t0, t1 = traj.t[i], traj.t[i + 1]
    p0, p1 = traj.yp[i], traj.yp[i + 1]
    if p1 == 0.0:
        return float(t1)
    h = t1 - t0
    d0 = -0.5 / epsilon * rhs(t0, traj.y[i]) * h
    d1 = -0.5 / epsilon * rhs(t1, traj.y[i + 1]) * h

    def hermite(s: float) -> float:
        s2, s3 = s * s, s * s * s
        return ((2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * d0
                + (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * d1)

    s = brentq(hermite, 0.0, 1.0, xtol=1e-15)
    return float(t0 + s * h)


def _shoot(rhs: Callable[[float, float], float], epsilon: float, y0: float, gamma: float,
           y1_guess: float, h: float) -> tuple[float, float, Trajectory]:
    def mismatch(y1: float) -> float:
        return rk4(rhs, epsilon, y0, y1, gamma, h).y[-1] - y0

    lo = y1_guess * 1e-6
    if not mismatch(lo) < 0:
        raise TurningPointError("no bracketing slope found (small slope does not undershoot)")
    hi = y1_guess
    for _ in range(MAX_DOUBLINGS):
        try:
            g_hi = mismatch(hi)
        except (OverflowError, ValueError):
            g_hi = math.nan
        if g_hi > 0:
            break
        if g_hi < 0:
            lo = hi
        hi *= 2.0
    else:
        raise TurningPointError("no bracketing slope found")
    y1 = brentq(mismatch, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    traj = rk4(rhs, epsilon, y0, y1, gamma, h)
    return y1, locate_turning_point(traj, rhs, epsilon), traj


def shoot_bc(ap: AutonomousProblem, gamma: float | None = None, h: float | None = None
             ) -> tuple[float, float]:
    """Initial slope ``y1 > 0`` with ``y(0) = y(gamma)`` and the resulting turning time.

    RK4 shooting with a bracketed root search on the slope; the turning time
    is read off the trajectory, not assumed.
    """
    g = ap.gamma if gamma is None else gamma
    f = el.compile_expr(ap.f_tilde, ("y",), backend="math")
    f0 = f(ap.y0)
    if not f0 > 0:
        raise TurningPointError(f"f~(y0) = {f0} is not positive")
    guess = f0 * g / (4.0 * ap.epsilon)  # exact for constant f~
    step = default_step(ap.epsilon, g) if h is None else h
    y1, t_star, _ = _shoot(lambda _t, y: f(y), ap.epsilon, ap.y0, g, guess, step)
    return y1, t_star


# --------------------------------------------------------------------------- scan


@dataclass
class ScanRow:
    control: str
    epsilon: float
    y1: float | None
    t_star: float | None
    drift: float | None
    error: str | None = None


@dataclass
class ScanReport:
    f_tilde: str
    gamma: float
    y0: float
    rows: list[ScanRow] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"f_tilde": self.f_tilde, "gamma": self.gamma, "y0": self.y0,
                "runs": [vars(r) for r in self.rows]}


def turning_scan(f_tilde: Expr | str, controls: Sequence[Expr | str],
                 eps_ladder: Sequence[float], gamma: float, y0: float = 0.0) -> ScanReport:
    """Shoot ``y(0) = y(gamma)`` for each control ``u(t)`` and ``eps``; record ``t*``.

    Measures the drift ``t* - gamma/2``. Failed runs are recorded and the
    scan continues. Nothing is concluded from the numbers.
    """
    fexpr = el.as_expr(f_tilde, ("u", "y"))
    fc = el.compile_expr(fexpr, ("u", "y"), backend="math")
    report = ScanReport(el.to_string(fexpr), gamma, y0)
    for ctrl in controls:
        uexpr = el.as_expr(ctrl, ("t",))
        uc = el.compile_expr(uexpr, ("t",), backend="math")

        def rhs(t: float, y: float, uc=uc) -> float:
            return fc(uc(t), y)

        for eps in eps_ladder:
            name = el.to_string(uexpr)
            try:
                f0 = rhs(0.0, y0)
                if not f0 > 0:
                    raise TurningPointError(f"f~ is not positive at t=0 (value {f0})")
                y1, t_star, traj = _shoot(rhs, eps, y0, gamma, f0 * gamma / (4 * eps),
                                          default_step(eps, gamma))
                fvals = np.array([rhs(t, y) for t, y in zip(traj.t, traj.y)])
                if np.any(fvals <= 0):
                    raise TurningPointError("f~ became non-positive along the trajectory")
                report.rows.append(ScanRow(name, eps, y1, t_star, t_star - gamma / 2))
            except (TurningPointError, ValueError, OverflowError) as exc:
                log.warning("turning scan: control %s eps=%g failed: %s", name, eps, exc)
                report.rows.append(ScanRow(name, eps, None, None, None, str(exc)))
    return report
