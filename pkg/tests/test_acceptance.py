"""Acceptance criteria, one test per criterion.

Each test records a one-line PASS/FAIL verdict with the measured numbers; the
lines are printed at the end of the pytest run (see ``conftest.py``) and when
this file is run as a script. Runtime limits are part of each criterion.
"""

from __future__ import annotations

import math
import random
import time

import numpy as np
import pytest

from nonlocal_sps import approximation as ap
from nonlocal_sps import exprlang as el
from nonlocal_sps import layers
from nonlocal_sps.control import closed_loop_problem, load_plant, output_error_bound
from nonlocal_sps.layers import LayerFamily, big_d
from nonlocal_sps.problem import load_problem
from nonlocal_sps.quadratic import from_problem_doc, lambda_interval
from nonlocal_sps.reference import compare, solve_bvp3
from nonlocal_sps.turning import (AutonomousProblem, energy_functional, exp_turning_time,
                                  first_integral, integrate, shoot_bc, turning_time)

from conftest import P1_DOC, P1_LAMBDA_LO
from exprgen import derivative_case, random_expr
from test_reference import manufactured

RESULTS: dict[int, str] = {}


def record(n: int, ok: bool, elapsed: float, limit: float, detail: str) -> None:
    ok = ok and elapsed < limit
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  ({elapsed:.2f}s / {limit:g}s)  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def p1(eps=None):
    return load_problem(P1_DOC, epsilon=eps)


def rel(err, *terms):
    scale = max(abs(x) for x in terms)
    return abs(err) if scale == 0 else err / scale


def test_c01_layer_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240501)
    worst = 0.0
    d_ok = True
    for _ in range(200):
        Z, Y = rng.uniform(0.05, 2.0, 2)
        a = rng.uniform(-1, 1)
        m = rng.uniform(0.05, 5.0)
        eps = 10 ** rng.uniform(-8, 0)
        A = rng.uniform(-2, 2)
        B = rng.uniform(0, 2)
        fam = LayerFamily(a, a + Z, a + Z + Y, m, eps, A, B)
        pts = np.array([fam.a, fam.gamma, fam.b])
        za, zg, zb = layers.zeta(fam, pts)
        ha, hg, hb = layers.zeta_hat(fam, pts)
        va, vg, vb = layers.v_corr(fam, 1.0, pts)
        pa, pg, pb = layers.psi(fam, 1.0, pts)
        errs = [
            rel(abs(zg - za + A), zg, za, A),
            rel(abs(zb - zg), zb, zg),
            rel(abs(hg - ha), hg, ha),
            rel(abs(hb - hg - B), hb, hg, B),
            rel(max(abs(va - vg), abs(vb - vg)), va, vg, vb, pa, pg, pb),
        ]
        worst = max(worst, *errs)
        raw, scaled = big_d(fam)
        d_ok &= raw > 0 and scaled > 0
    fam = LayerFamily(0.0, 0.25, 0.5, 0.4, 1e-12, -0.134, 0.159)
    t = np.linspace(0, 0.5, 101)
    finite = all(np.all(np.isfinite(f)) for f in (
        layers.zeta(fam, t), layers.zeta_hat(fam, t), layers.psi(fam, 1.6, t),
        layers.v_corr(fam, 1.6, t), np.array(big_d(fam)[1])))
    elapsed = time.perf_counter() - t0
    record(1, worst <= 1e-12 and d_ok and finite, elapsed, 1.0,
           f"worst relative identity error {worst:.2e}, D>0: {d_ok}, finite at eps=1e-12: {finite}")


def test_c02_layer_ode_residuals():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    t_unit = np.linspace(0, 1, 101)
    for eps in (1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8):
        for _ in range(5):
            Z, Y = rng.uniform(0.1, 1.0, 2)
            fam = LayerFamily(0.0, Z, Z + Y, rng.uniform(0.1, 3), eps, rng.uniform(-1, 1),
                              rng.uniform(0, 1))
            t = t_unit * fam.b
            for fn, amp in ((layers.zeta, abs(fam.A)), (layers.zeta_hat, fam.B)):
                y = fn(fam, t)
                res = np.abs(eps * fn(fam, t, 2) - fam.m * y)
                worst = max(worst, float(np.max(res / (amp + np.abs(fam.m * y)))))
    elapsed = time.perf_counter() - t0
    record(2, worst <= 1e-9, elapsed, 1.0, f"worst scaled residual {worst:.2e}")


def test_c03_figure_reproduction():
    t0 = time.perf_counter()
    eps = 1e-4
    sol = solve_bvp3(p1(), 512, eps)
    g = sol.mesh.gamma_index
    bc = max(abs(sol.y[0] - sol.y[g]), abs(sol.y[g] - sol.y[-1]))
    inner = (sol.t >= 0.05) & (sol.t <= 0.45)
    eta = -1 + np.sqrt(1 - sol.t)
    dev = float(np.max(np.abs(sol.y[inner] - eta[inner])))
    wa, wb = abs(sol.w[0]), abs(sol.w[-1])
    elapsed = time.perf_counter() - t0
    ok = bc <= sol.tol and dev <= 5 * eps and wa >= 10 and wb >= 10
    record(3, ok, elapsed, 10.0,
           f"bc defect {bc:.1e} (tol {sol.tol:.1e}), interior |y-eta| = {dev / eps:.2f} eps, "
           f"|w(0)| = {wa:.1f}, |w(0.5)| = {wb:.1f}")


def test_c04_order_eps_accuracy():
    t0 = time.perf_counter()
    prob = p1()
    E, violations = [], 0
    for eps in (1e-2, 1e-3, 1e-4):
        sol = solve_bvp3(prob, 512, eps)
        appr = ap.build(prob, eps)
        m = compare(sol, appr, slack=1e-8 + 10 * sol.tol)
        E.append(m.max_err)
        violations += m.envelope_violations
    r1, r2 = E[1] / E[0], E[2] / E[1]
    elapsed = time.perf_counter() - t0
    record(4, r1 <= 0.3 and r2 <= 0.3 and violations == 0, elapsed, 30.0,
           f"E = {E[0]:.3e}, {E[1]:.3e}, {E[2]:.3e}; ratios {r1:.3f}, {r2:.3f} (need <= 0.3); "
           f"envelope violations {violations}")


def test_c05_lambda_interval():
    t0 = time.perf_counter()
    lo, hi = lambda_interval(from_problem_doc(P1_DOC))
    elapsed = time.perf_counter() - t0
    record(5, abs(lo - P1_LAMBDA_LO) <= 1e-4 and abs(hi - 2.0) <= 1e-4, elapsed, 5.0,
           f"interval ({lo:.7f}, {hi:.7f}), expected lower end {P1_LAMBDA_LO:.7f}")


def test_c06_manufactured_convergence():
    t0 = time.perf_counter()
    prob = manufactured(1e-3)
    errs = []
    for n in (64, 128, 256):
        sol = solve_bvp3(prob, n, initial=np.zeros(n + 1))
        errs.append(float(np.max(np.abs(sol.y - np.cos(8 * math.pi * sol.t)))))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    elapsed = time.perf_counter() - t0
    record(6, min(orders) >= 1.5, elapsed, 10.0,
           f"errors {errs[0]:.2e}, {errs[1]:.2e}, {errs[2]:.2e}; orders {orders[0]:.2f}, "
           f"{orders[1]:.2f}")


def test_c07_turning_point():
    t0 = time.perf_counter()
    exp_y = el.parse("exp(y)")
    drift, agree = 0.0, 0.0
    for eps in (1e-2, 1e-3, 1e-4):
        tmpl = AutonomousProblem(exp_y, -10.0, None, 0.25, 0.5, eps)
        y1, t_star = shoot_bc(tmpl)
        drift = max(drift, abs(t_star - 0.125))
        apx = tmpl.with_slope(y1)
        agree = max(agree, abs(turning_time(apx) - exp_turning_time(apx)))
    parab = 0.0
    for eps, y1, c in ((1e-2, 1.0, 3.0), (1e-3, 2.0, 3.0), (1e-4, 7.5, 0.5)):
        apx = AutonomousProblem(el.Const(c), 0.0, y1, 0.25, 0.5, eps)
        parab = max(parab, abs(turning_time(apx) - 2 * eps * y1 / c))
    elapsed = time.perf_counter() - t0
    record(7, drift <= 1e-6 and agree <= 1e-7 and parab <= 1e-10, elapsed, 10.0,
           f"max |t*-0.125| {drift:.1e}, quadrature vs closed form {agree:.1e}, "
           f"parabola {parab:.1e}")


def test_c08_energy_conservation():
    t0 = time.perf_counter()
    cases = [("exp(y)", 0.0, 1.0), ("1 + y^2", 0.0, 2.0), ("2 + sin(y)", 0.5, 3.0)]
    worst = 0.0
    for src, y0, y1 in cases:
        apx = AutonomousProblem(el.parse(src), y0, y1, 0.25, 0.5, 0.01)
        en = energy_functional(apx.f_tilde, y0)
        traj = integrate(apx)
        E = first_integral(apx, traj.y, traj.yp, en)
        c1 = en.c1(0.01, y0, y1)
        worst = max(worst, float(np.max(np.abs(E - c1))) / abs(c1))
    elapsed = time.perf_counter() - t0
    record(8, worst <= 1e-8, elapsed, 5.0, f"worst relative energy drift {worst:.1e}")


def test_c09_control_synthesis():
    t0 = time.perf_counter()
    plant = load_plant({"k": -2, "a": 0, "gamma": 0.25, "b": 0.5, "f": "0.5*sin(y)",
                        "g": "y", "lambda": 0.6})
    eps = 1e-4
    prob = closed_loop_problem(plant, "t^2", eps)
    sol = solve_bvp3(prob, 512)
    inner = (sol.t >= 0.1) & (sol.t <= 0.4)
    dev = float(np.max(np.abs(sol.y[inner] - sol.t[inner] ** 2)))
    bound = output_error_bound(plant, "t^2", eps).bound
    C = ap.build(prob).C
    limit = bound + 2 * C * eps + 1e-6
    elapsed = time.perf_counter() - t0
    record(9, dev <= limit, elapsed, 10.0,
           f"tracking error {dev:.2e} <= {limit:.2e} (bound {bound:.2e})")


def test_c10_parser_properties():
    t0 = time.perf_counter()
    rng = random.Random(1000)
    worst, round_trip = 0.0, True
    for _ in range(1000):
        e, var, point, d, fd = derivative_case(rng)
        worst = max(worst, abs(d - fd) / (1 + abs(d)))
        tree = el.parse(random_expr(rng))
        round_trip &= el.parse(el.to_string(tree)) == tree
    elapsed = time.perf_counter() - t0
    record(10, worst <= 1e-6 and round_trip, elapsed, 2.0,
           f"worst derivative mismatch {worst:.1e}, round trip identity: {round_trip}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
