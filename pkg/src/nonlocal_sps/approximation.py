"""Closed-form approximation ``y_tilde`` and its error envelope."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import layers
from .layers import LayerFamily
from .problem import Problem, ReducedPath, reduced_path

# sign cases of (eta(b) - eta(g), eta(g) - eta(a)); ties go to the "<= 0" side
CASE_LABELS = {
    1: "eta(b)-eta(g) <= 0, eta(g)-eta(a) <= 0",
    2: "eta(b)-eta(g) >= 0, eta(g)-eta(a) >= 0",
    3: "eta(b)-eta(g) <= 0, eta(g)-eta(a) >= 0",
    4: "eta(b)-eta(g) >= 0, eta(g)-eta(a) <= 0",
}


def _case(right_jump: float, left_jump: float) -> int:
    r_nonpos = right_jump <= 0
    l_nonpos = left_jump <= 0
    if r_nonpos and l_nonpos:
        return 1
    if not r_nonpos and not l_nonpos:
        return 2
    if r_nonpos:
        return 3
    return 4


@dataclass(frozen=True)
class Approximation:
    problem: Problem
    path: ReducedPath
    layers: LayerFamily
    C: float
    branch: int  # +1: eta + zeta + zeta_hat + C eps ; -1: eta + zeta - zeta_hat - C eps
    case_id: int

    @property
    def epsilon(self) -> float:
        return self.layers.epsilon

    def y_tilde(self, t):
        return y_tilde(self, t)

    def w_tilde(self, t):
        return w_tilde(self, t)


def build(p: Problem, epsilon: float | None = None) -> Approximation:
    """Assemble the approximation for ``p`` at ``epsilon`` (default ``p.epsilon``)."""
    eps = p.require_epsilon() if epsilon is None else epsilon
    path = reduced_path(p)
    ea, eg, eb = (float(v) for v in path.eta(np.array([p.a, p.gamma, p.b])))
    fam = layers.layer_family(p.a, p.gamma, p.b, p.m, eps, ea, eg, eb)
    right_jump = eb - eg
    branch = 1 if right_jump <= 0 else -1
    C = path.max_abs_eta_dd / p.m
    return Approximation(p, path, fam, C, branch, _case(right_jump, eg - ea))


def y_tilde(appr: Approximation, t):
    t = np.asarray(t, dtype=float)
    fam = appr.layers
    sgn = appr.branch
    return (appr.path.eta(t) + layers.zeta(fam, t)
            + sgn * (layers.zeta_hat(fam, t) + appr.C * fam.epsilon))


def w_tilde(appr: Approximation, t):
    """Derivative of :func:`y_tilde`."""
    t = np.asarray(t, dtype=float)
    fam = appr.layers
    return (appr.path.d_eta(t) + layers.zeta(fam, t, 1)
            + appr.branch * layers.zeta_hat(fam, t, 1))


def envelope(appr: Approximation, t):
    """Lower and upper bounds on ``y_tilde(t) - y(t)`` for the exact solution y.

    Case 1:  -v <= yt - y <= 2 zh + 2 C eps
    Case 2:  -v <= y - yt <= 2 zh + 2 C eps
    Case 3:   0 <= yt - y <= v + 2 zh + 2 C eps
    Case 4:   0 <= y - yt <= v + 2 zh + 2 C eps
    """
    t = np.asarray(t, dtype=float)
    fam = appr.layers
    v = layers.v_corr(fam, appr.problem.lam, t)
    zh2 = 2.0 * layers.zeta_hat(fam, t) + 2.0 * appr.C * fam.epsilon
    zero = np.zeros_like(t)
    if appr.case_id == 1:
        return -v, zh2
    if appr.case_id == 2:
        return -zh2, v
    if appr.case_id == 3:
        return zero, v + zh2
    return -(v + zh2), zero
