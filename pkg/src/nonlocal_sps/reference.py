"""Finite-difference reference solver on a layer-adapted (Shishkin) mesh.

Solves ``eps y'' + k y = f(u(t), y)`` with ``y(a) = y(gamma) = y(b)`` by
damped Newton on the global three-point-stencil system. Shooting is avoided
on purpose: its conditioning degrades like ``exp(sqrt(m/eps) (b - a))``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from . import approximation as approx_mod
from .approximation import Approximation
from .problem import Problem, reduced_path, tube_width

log = logging.getLogger(__name__)

NEWTON_TOL = 1e-10
MAX_NEWTON = 50
MAX_HALVINGS = 30


class MeshError(ValueError):
    pass


class SolverDivergence(ArithmeticError):
    pass


@dataclass(frozen=True)
class LayerMesh:
    nodes: np.ndarray
    tau_a: float
    tau_b: float
    gamma_index: int

    @property
    def N(self) -> int:
        return len(self.nodes) - 1


def shishkin_mesh(a: float, gamma: float, b: float, epsilon: float, m: float,
                  N: int) -> LayerMesh:
    """Piecewise-uniform mesh with ``N/4`` cells in each end layer.

    Transition width ``tau = min((b-a)/4, 2 sqrt(eps/m) ln N)``; ``gamma``
    replaces the nearest interior node so it is always a mesh point.
    """
    if N < 64 or N % 4:
        raise MeshError(f"N must be a multiple of 4 and >= 64, got {N}")
    if not (a < gamma < b) or epsilon <= 0 or m <= 0:
        raise MeshError("degenerate geometry or parameters")
    tau = min((b - a) / 4.0, 2.0 * math.sqrt(epsilon / m) * math.log(N))
    q = N // 4
    left = np.linspace(a, a + tau, q + 1)
    mid = np.linspace(a + tau, b - tau, 2 * q + 1)
    right = np.linspace(b - tau, b, q + 1)
    nodes = np.concatenate([left, mid[1:], right[1:]])
    nodes[0], nodes[-1] = a, b
    gi = int(np.argmin(np.abs(nodes[1:-1] - gamma))) + 1
    nodes[gi] = gamma
    if np.any(np.diff(nodes) <= 0):
        raise MeshError("mesh is not strictly increasing after snapping gamma")
    return LayerMesh(nodes, tau, tau, gi)


@dataclass(frozen=True)
class DiscreteSolution:
    mesh: LayerMesh
    y: np.ndarray
    w: np.ndarray
    newton_iters: int
    residual_norm: float
    tol: float
    epsilon: float
    tube_violations: int = 0

    @property
    def t(self) -> np.ndarray:
        return self.mesh.nodes


def _residual(p: Problem, eps: float, t: np.ndarray, y: np.ndarray, gi: int) -> np.ndarray:
    h = np.diff(t)
    hl, hr = h[:-1], h[1:]
    F = np.empty_like(y)
    F[1:-1] = (eps * 2.0 / (hl + hr) * ((y[2:] - y[1:-1]) / hr - (y[1:-1] - y[:-2]) / hl)
               + p.k * y[1:-1] - p.f_of(t[1:-1], y[1:-1]))
    F[0] = y[0] - y[gi]
    F[-1] = y[gi] - y[-1]
    return F


def _jacobian(p: Problem, eps: float, t: np.ndarray, y: np.ndarray, gi: int):
    n = len(y)
    h = np.diff(t)
    hl, hr = h[:-1], h[1:]
    c = eps * 2.0 / (hl + hr)
    lower = c / hl
    upper = c / hr
    diag = -(lower + upper) + p.k - p.fy_of(t[1:-1], y[1:-1])
    idx = np.arange(1, n - 1)
    rows = np.concatenate([idx, idx, idx, [0, 0, n - 1, n - 1]])
    cols = np.concatenate([idx - 1, idx, idx + 1, [0, gi, gi, n - 1]])
    vals = np.concatenate([lower, diag, upper, [1.0, -1.0, 1.0, -1.0]])
    return sparse.csc_matrix((vals, (rows, cols)), shape=(n, n))


def newton_solve(p: Problem, mesh: LayerMesh, y0: np.ndarray, epsilon: float
                 ) -> tuple[np.ndarray, int, float, float]:
    """Damped Newton; returns ``(y, iterations, max residual, tolerance)``."""
    t = mesh.nodes
    gi = mesh.gamma_index
    y = np.array(y0, dtype=float)
    F = _residual(p, epsilon, t, y, gi)
    norm = float(np.max(np.abs(F)))
    for it in range(MAX_NEWTON + 1):
        tol = NEWTON_TOL * (1.0 + float(np.max(np.abs(y))))
        if norm <= tol:
            return y, it, norm, tol
        if it == MAX_NEWTON:
            break
        J = _jacobian(p, epsilon, t, y, gi)
        step = spsolve(J, -F)
        if not np.all(np.isfinite(step)):
            raise SolverDivergence("Newton step is not finite (singular Jacobian?)")
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            y_new = y + lam * step
            with np.errstate(all="ignore"):
                F_new = _residual(p, epsilon, t, y_new, gi)
            norm_new = float(np.max(np.abs(F_new)))
            if np.isfinite(norm_new) and norm_new < norm:
                break
            lam *= 0.5
        else:
            # no decrease: accept only if already at rounding level
            if norm <= 100 * tol:
                return y, it, norm, tol
            raise SolverDivergence(f"damping failed at Newton iteration {it}, residual {norm:.3e}")
        y, F, norm = y_new, F_new, norm_new
        log.debug("newton it=%d damping=%g residual=%.3e", it, lam, norm)
    raise SolverDivergence(f"Newton did not converge in {MAX_NEWTON} iterations "
                           f"(residual {norm:.3e})")


def solve_bvp3(p: Problem, N: int = 512, epsilon: float | None = None,
               initial: np.ndarray | None = None) -> DiscreteSolution:
    """Reference solution on a Shishkin mesh.

    The initial iterate is ``y_tilde`` sampled on the mesh unless ``initial``
    (values at the mesh nodes) is given. Nodes where the result leaves the
    tube around ``eta`` are counted in ``tube_violations``, not rejected.
    """
    eps = p.require_epsilon() if epsilon is None else epsilon
    mesh = shishkin_mesh(p.a, p.gamma, p.b, eps, p.m, N)
    t = mesh.nodes
    if initial is None:
        appr = approx_mod.build(p, eps)
        initial = appr.y_tilde(t)
    y, iters, res, tol = newton_solve(p, mesh, initial, eps)
    w = np.gradient(y, t, edge_order=2)
    path = reduced_path(p)
    eta = path.eta(t)
    ea, eg, eb = (float(v) for v in path.eta(np.array([p.a, p.gamma, p.b])))
    d = tube_width(p, t, ea, eg, eb)
    violations = int(np.count_nonzero(np.abs(y - eta) >= d))
    if violations:
        log.info("reference solution leaves the tube at %d of %d nodes (eps=%g)",
                 violations, len(t), eps)
    return DiscreteSolution(mesh, y, w, iters, res, tol, eps, violations)


def sample_approximation(appr: Approximation, mesh: LayerMesh) -> DiscreteSolution:
    """Wrap ``y_tilde`` on ``mesh`` as a :class:`DiscreteSolution`."""
    t = mesh.nodes
    return DiscreteSolution(mesh, appr.y_tilde(t), appr.w_tilde(t), 0, 0.0, 0.0,
                            appr.epsilon)


@dataclass(frozen=True)
class Metrics:
    max_err: float
    interior_max_err: float
    err_over_eps: float
    envelope_violations: int
    case_id: int

    def as_dict(self) -> dict:
        return {"max_err": self.max_err, "interior_max_err": self.interior_max_err,
                "err_over_eps": self.err_over_eps,
                "envelope_violations": self.envelope_violations, "case_id": self.case_id}


def compare(sol: DiscreteSolution, appr: Approximation, slack: float | None = None) -> Metrics:
    """Error of ``y_tilde`` against a reference solution at the mesh nodes.

    The envelope check uses ``slack = 1e-8 + 10 * sol.tol`` unless given.
    """
    p = appr.problem
    t = sol.t
    yt = appr.y_tilde(t)
    err = np.abs(sol.y - yt)
    X = p.b - p.a
    inner = (t >= p.a + 0.1 * X) & (t <= p.b - 0.1 * X)
    lo, hi = approx_mod.envelope(appr, t)
    diff = yt - sol.y
    sl = 1e-8 + 10.0 * sol.tol if slack is None else slack
    bad = (diff < lo - sl) | (diff > hi + sl)
    max_err = float(err.max())
    return Metrics(max_err, float(err[inner].max()), max_err / sol.epsilon,
                   int(np.count_nonzero(bad)), appr.case_id)
