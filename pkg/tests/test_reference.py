import math

import numpy as np
import pytest

from nonlocal_sps import approximation as ap
from nonlocal_sps import exprlang as el
from nonlocal_sps.problem import Problem
from nonlocal_sps.reference import (MeshError, SolverDivergence, _residual, compare,
                                    newton_solve, sample_approximation, shishkin_mesh,
                                    solve_bvp3)


def manufactured(eps, k=-4.0, lam=3.0, amp=1.0):
    """y = amp*cos(8 pi t) solves eps y'' + k y = y^2 + u with the u below."""
    w = 8 * math.pi
    u = el.parse(f"({amp * (-eps * w * w + k)})*cos({w}*t) - ({amp**2})*cos({w}*t)^2")
    return Problem(k=k, a=0.0, gamma=0.25, b=0.5, f=el.parse("y^2 + u"), u=u, lam=lam,
                   epsilon=eps, eta_seed=0.0)


class TestMesh:
    def test_large_epsilon_is_uniform(self):
        mesh = shishkin_mesh(0, 0.25, 0.5, 1.0, 0.4, 64)
        assert mesh.tau_a == 0.125
        np.testing.assert_allclose(np.diff(mesh.nodes), 0.5 / 64, rtol=1e-12)

    def test_transition_point(self):
        # 2 sqrt(eps/m) ln N = 0.1754 exceeds (b-a)/4 here, so the cap applies
        mesh = shishkin_mesh(0, 0.25, 0.5, 1e-4, 0.4, 256)
        assert mesh.tau_a == 0.125
        mesh = shishkin_mesh(0, 0.25, 0.5, 1e-5, 0.4, 256)
        assert mesh.tau_a == pytest.approx(2 * math.sqrt(1e-5 / 0.4) * math.log(256), rel=1e-14)
        assert mesh.tau_a == pytest.approx(0.05545, abs=1e-5)
        q = 64
        np.testing.assert_allclose(np.diff(mesh.nodes[:q + 1]), mesh.tau_a / q, rtol=1e-9)

    @pytest.mark.parametrize("gamma", [0.25, 0.1, 0.3333, 0.49])
    def test_gamma_is_a_node(self, gamma):
        mesh = shishkin_mesh(0, gamma, 0.5, 1e-4, 0.4, 128)
        assert mesh.nodes[mesh.gamma_index] == gamma
        assert np.all(np.diff(mesh.nodes) > 0)

    @pytest.mark.parametrize("N", [10, 66, 32])
    def test_bad_size(self, N):
        with pytest.raises(MeshError):
            shishkin_mesh(0, 0.25, 0.5, 1e-4, 0.4, N)


class TestSolve:
    def test_homogeneous(self):
        p = Problem(k=-2, a=0, gamma=0.25, b=0.5, f=el.parse("0*y + u"), u=el.parse("0"),
                    lam=1.0, epsilon=1e-3, eta=el.parse("0"))
        sol = solve_bvp3(p, 128, initial=np.linspace(1, -1, 129))
        assert np.max(np.abs(sol.y)) <= 1e-12

    def test_p1_structure(self, p1):
        sol = solve_bvp3(p1, 512, 1e-4)
        g = sol.mesh.gamma_index
        assert abs(sol.y[0] - sol.y[g]) <= sol.tol and abs(sol.y[-1] - sol.y[g]) <= sol.tol
        assert abs(sol.w[0]) >= 10 and abs(sol.w[-1]) >= 10
        assert sol.tube_violations == 0

    @pytest.mark.parametrize("eps", [1e-2, 1e-4])
    def test_residual_small(self, p1, eps):
        sol = solve_bvp3(p1, 256, eps)
        F = _residual(p1, eps, sol.t, sol.y, sol.mesh.gamma_index)
        assert np.max(np.abs(F)) <= 1e-10 * (1 + np.max(np.abs(sol.y)))

    def test_tube_threshold(self, p1):
        # the tube is left only at the largest epsilon; reported, not rejected
        counts = {e: solve_bvp3(p1, 256, e).tube_violations for e in (1e-2, 1e-3, 1e-4)}
        assert counts[1e-3] == 0 and counts[1e-4] == 0
        assert counts[1e-2] > 0

    def test_manufactured_recovered(self):
        p = manufactured(1e-3)
        sol = solve_bvp3(p, 256, initial=np.zeros(257))
        assert np.max(np.abs(sol.y - np.cos(8 * math.pi * sol.t))) < 2e-3

    def test_refinement_consistency(self):
        # eps large: the mesh is uniform and each level contains the previous one
        p = manufactured(0.01, amp=0.1)
        sols = [solve_bvp3(p, n, initial=np.zeros(n + 1)) for n in (64, 128, 256)]
        d1 = np.max(np.abs(sols[0].y - sols[1].y[::2]))
        d2 = np.max(np.abs(sols[1].y - sols[2].y[::2]))
        truncation = d1 / 3  # Richardson estimate for the N=128 solution
        assert d2 <= 4 * truncation

    @pytest.mark.filterwarnings("ignore::scipy.sparse.linalg.MatrixRankWarning")
    def test_divergence_reported(self, p1):
        mesh = shishkin_mesh(0, 0.25, 0.5, 1e-3, 0.4, 64)
        with pytest.raises(SolverDivergence):
            newton_solve(p1, mesh, np.full(65, np.nan), 1e-3)


class TestCompare:
    def test_self_comparison(self, p1):
        appr = ap.build(p1, 1e-3)
        mesh = shishkin_mesh(0, 0.25, 0.5, 1e-3, 0.4, 128)
        m = compare(sample_approximation(appr, mesh), appr)
        assert m.max_err == 0.0 and m.envelope_violations == 0

    def test_metrics_dict(self, p1):
        sol = solve_bvp3(p1, 128, 1e-3)
        d = compare(sol, ap.build(p1, 1e-3)).as_dict()
        assert set(d) == {"max_err", "interior_max_err", "err_over_eps",
                          "envelope_violations", "case_id"}
        assert d["case_id"] == 1
        assert d["err_over_eps"] == pytest.approx(d["max_err"] / 1e-3)
