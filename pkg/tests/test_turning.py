import math

import numpy as np
import pytest

from nonlocal_sps import exprlang as el
from nonlocal_sps.turning import (EXP_Y, AutonomousProblem, TurningPointError,
                                  energy_functional, exp_constants, exp_exact_solution,
                                  exp_turning_time, first_integral, integrate,
                                  locate_turning_point, shoot_bc, turning_scan, turning_time)


def auto(f="exp(y)", y0=0.0, y1=1.0, eps=0.01, gamma=0.25):
    return AutonomousProblem(el.parse(f, ("y",)), y0, y1, gamma, 2 * gamma, eps)


class TestEnergy:
    def test_exp_constant(self):
        ap = auto()
        en = energy_functional(ap.f_tilde, ap.y0)
        assert en.closed_form
        assert en.c1(0.01, 0.0, 1.0) == pytest.approx(1.01)
        traj = integrate(ap)
        E = first_integral(ap, traj.y, traj.yp, en)
        assert np.max(np.abs(E - 1.01)) <= 1e-9

    def test_turning_point_energy(self):
        ap = auto()
        traj = integrate(ap)
        f = el.compile_expr(ap.f_tilde, ("y",), backend="math")
        t_star = locate_turning_point(traj, lambda _t, y: f(y), ap.epsilon)
        y_star = exp_exact_solution(ap, t_star)
        assert math.exp(y_star) == pytest.approx(1.01, rel=1e-12)

    def test_constant_force(self):
        ap = auto("3", y0=0.5, y1=2.0, eps=1e-3)
        en = energy_functional(ap.f_tilde, ap.y0)
        assert en.F(1.5) == pytest.approx(3.0)
        y = np.array([0.7, 1.1])
        yp = np.array([0.3, -0.4])
        np.testing.assert_allclose(first_integral(ap, y, yp),
                                   1e-3 * yp**2 + 3 * (y - 0.5), rtol=1e-12)

    def test_numeric_inverse(self):
        en = energy_functional(el.parse("1 + y^2"), 0.0)
        for w in (-3.0, 0.2, 5.0):
            assert en.F(en.F_inv(w)) == pytest.approx(w, abs=1e-12)


class TestTurningTime:
    @pytest.mark.parametrize("eps", [1e-2, 1e-3])
    def test_parabola(self, eps):
        ap = auto("3", y1=2.0, eps=eps)
        assert turning_time(ap) == pytest.approx(2 * eps * 2.0 / 3, abs=1e-14)

    @pytest.mark.parametrize("eps,y1", [(1e-2, 1.0), (1e-3, 5.0), (1e-4, 20.0)])
    def test_exp_quadrature_vs_closed_form(self, eps, y1):
        ap = auto(eps=eps, y1=y1)
        assert turning_time(ap) == pytest.approx(exp_turning_time(ap), abs=1e-8)
        num = energy_functional(ap.f_tilde, ap.y0, numeric=True)
        assert turning_time(ap, num) == pytest.approx(exp_turning_time(ap), abs=1e-8)

    def test_small_slope(self):
        times = [turning_time(auto(y1=s)) for s in (1e-1, 1e-3, 1e-5)]
        assert times[0] > times[1] > times[2] and times[2] < 1e-6


class TestExactSolution:
    def test_peak(self):
        ap = auto()
        c1, c2 = exp_constants(ap)
        assert exp_exact_solution(ap, -c2) == pytest.approx(math.log(c1), abs=1e-15)

    def test_ode_residual_and_energy(self):
        ap = auto(eps=1e-3, y1=10.0)
        c1, _ = exp_constants(ap)
        t = np.linspace(0, 0.25, 1001)
        y, yp, ypp = exp_exact_solution(ap, t, derivatives=True)
        assert np.max(np.abs(1e-3 * ypp + 0.5 * np.exp(y))) <= 1e-8 * c1
        assert np.max(np.abs(1e-3 * yp**2 + np.exp(y) - c1)) <= 1e-10
        assert y[0] == pytest.approx(0.0, abs=1e-14) and yp[0] == pytest.approx(10.0)

    def test_matches_rk4(self):
        ap = auto()
        traj = integrate(ap)
        np.testing.assert_allclose(traj.y, exp_exact_solution(ap, traj.t), atol=1e-10)

    def test_only_for_exp(self):
        with pytest.raises(ValueError):
            exp_exact_solution(auto("1 + y^2"), 0.1)


class TestShooting:
    @pytest.mark.parametrize("eps", [1e-2, 1e-3, 1e-4])
    def test_exp_half_gamma(self, eps):
        ap = auto(y0=-10.0, y1=None, eps=eps)
        y1, t_star = shoot_bc(ap)
        assert t_star == pytest.approx(0.125, abs=1e-6)
        closed = exp_turning_time(ap.with_slope(y1))
        assert closed == pytest.approx(t_star, abs=1e-7)

    def test_parabola(self):
        y1, t_star = shoot_bc(auto("3", y1=None, eps=1e-3))
        assert t_star == pytest.approx(0.125, abs=1e-12)
        assert y1 == pytest.approx(3 * 0.25 / (4 * 1e-3), rel=1e-10)

    def test_non_exponential(self):
        y1, t_star = shoot_bc(auto("1 + y^2", y1=None, eps=1e-2))
        assert t_star == pytest.approx(0.125, abs=1e-6)

    def test_monotone_profile(self):
        ap = auto(y0=-10.0, y1=None, eps=1e-3)
        y1, t_star = shoot_bc(ap)
        traj = integrate(ap.with_slope(y1))
        dy = np.diff(traj.y)
        rising = traj.t[1:] <= t_star
        assert np.all(dy[rising] > 0) and np.all(dy[traj.t[:-1] >= t_star] < 0)

    def test_unreachable(self):
        # the largest reachable turning time is below gamma/2 for y0 = 0
        with pytest.raises(TurningPointError):
            shoot_bc(auto(y0=0.0, y1=None, eps=1e-3))

    def test_nonpositive_force(self):
        with pytest.raises(TurningPointError):
            shoot_bc(auto("-1", y1=None))


class TestScan:
    def test_constant_control(self):
        rep = turning_scan("u*exp(y)", ["2"], [1e-2, 1e-3], 0.25, y0=-10.0)
        assert all(abs(r.drift) < 1e-6 for r in rep.rows)

    def test_time_varying_control(self):
        rep = turning_scan("u*exp(y)", ["1 + t"], [1e-2, 1e-3], 0.25, y0=-10.0)
        assert len(rep.rows) == 2
        assert all(r.error is None and r.t_star is not None for r in rep.rows)

    def test_empty(self):
        assert turning_scan("u*exp(y)", [], [1e-2], 0.25).rows == []

    def test_failure_recorded(self):
        rep = turning_scan("u*exp(y)", ["-1"], [1e-2], 0.25)
        assert rep.rows[0].error is not None
        assert rep.as_dict()["runs"][0]["t_star"] is None

    def test_validation(self):
        with pytest.raises(ValueError):
            AutonomousProblem(el.parse("t*y"), 0, 1, 0.25, 0.5, 1e-2)
        with pytest.raises(ValueError):
            auto(y1=-1.0)
        assert EXP_Y == el.parse("exp(y)")
