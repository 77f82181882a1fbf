import numpy as np
import pytest
from scipy.integrate import quad

from eisenlift.complexlift import (
    NonHarmonicError,
    SplitMetric,
    cauchy_riemann_residual,
    complex_lift_initial,
    detect_blowup,
    f_from_potential,
    solve_complex,
    split_geodesic_rhs,
    verify_complex_solution,
)
from eisenlift.geometry import geodesic_field_fd
from eisenlift.odeint import HermiteInterpolant
from eisenlift.lift import LiftState, Trajectory, integrate_lift, project
from eisenlift.potentials import catalog_get, from_function, random_samples

# escape time of x'' = x^2, x(0) = 1, xdot(0) = 0, from the energy identity
BLOWUP_TIME = quad(lambda x: 1.0 / np.sqrt(2.0 * (x**3 - 1.0) / 3.0), 1.0, np.inf)[0]


def _linear_plane():
    return from_function("x", 2, lambda t, x: x[0], time_independent=True,
                         grad=lambda t, x: np.array([1.0, 0.0]), hess=lambda t, x: np.zeros((2, 2)))


class TestHolomorphic:
    def test_z_squared(self):
        H = f_from_potential(catalog_get("cubic_harmonic_2d"))
        np.testing.assert_allclose(H.F(1.0, 1.0), [0.0, 2.0])
        assert H.F_complex(complex(0.3, -0.7)) == pytest.approx(complex(0.3, -0.7) ** 2, abs=1e-14)

    def test_constant(self):
        H = f_from_potential(_linear_plane())
        np.testing.assert_allclose(H.F(0.4, -2.0), [1.0, 0.0])

    def test_identity(self):
        H = f_from_potential(catalog_get("saddle_harmonic"))
        np.testing.assert_allclose(H.F(0.4, -2.0), [0.4, -2.0])

    def test_rejects_non_harmonic(self):
        with pytest.raises(NonHarmonicError) as info:
            f_from_potential(catalog_get("harmonic", n=2))
        assert info.value.max_laplacian == pytest.approx(2.0)

    @pytest.mark.parametrize("name", ["saddle_harmonic", "neg_saddle", "cubic_harmonic_2d"])
    def test_cauchy_riemann(self, name, rng):
        H = f_from_potential(catalog_get(name))
        assert H.cr_residual <= 1e-8
        assert cauchy_riemann_residual(H, random_samples(2, 100, rng, box=2.0, t_box=0.0)) <= 1e-8


class TestSplitLift:
    def test_signature(self):
        m = SplitMetric(catalog_get("saddle_harmonic"))
        ev = np.sort(np.linalg.eigvalsh(m.matrix(np.zeros(4))))
        assert list(np.sign(ev)) == [-1, -1, 1, 1]

    def test_free_straight(self):
        m = SplitMetric(from_function("0", 2, lambda t, x: 0.0, time_independent=True,
                                      grad=lambda t, x: np.zeros(2), hess=lambda t, x: np.zeros((2, 2))))
        d = split_geodesic_rhs(m, LiftState(np.zeros(4), np.array([0.2, 1.0, 0.5, -0.3])))
        np.testing.assert_array_equal(d.qdot, np.zeros(4))

    def test_saddle_plugin(self):
        m = SplitMetric(catalog_get("saddle_harmonic"))
        d = split_geodesic_rhs(m, LiftState(np.array([0, 0, 1.0, 1.0]), np.array([0.0, 1.0, 0, 0])))
        np.testing.assert_allclose(d.qdot[2:], [1.0, 1.0])

    def test_rhs_matches_fd(self, rng):
        m = SplitMetric(catalog_get("cubic_harmonic_2d"))
        fd, an = geodesic_field_fd(m), m.geodesic_field()
        for _ in range(20):
            y = np.r_[rng.uniform(-1, 1, 4), rng.normal(size=4)]
            assert np.max(np.abs(an(0, y) - fd(0, y))) <= 1e-6

    def test_initial_data(self):
        S = catalog_get("saddle_harmonic")
        st0 = complex_lift_initial(S, 0.0, [1.0, 0.0], [0.0, 0.0])
        assert st0.qdot[0] == pytest.approx(0.5)
        m = SplitMetric(S)
        assert m.value(st0.q, st0.qdot, st0.qdot) == pytest.approx(0.0, abs=1e-15)
        F = from_function("0", 2, lambda t, x: 0.0, time_independent=True, grad=lambda t, x: np.zeros(2),
                          hess=lambda t, x: np.zeros((2, 2)))
        assert complex_lift_initial(F, 0.0, [0, 0], [1.0, 0.0]).qdot[0] == pytest.approx(0.5)
        assert complex_lift_initial(F, 0.0, [0, 0], [0.0, 1.0]).qdot[0] == pytest.approx(-0.5)

    @pytest.mark.parametrize("name,ref", [("saddle_harmonic", np.cosh), ("neg_saddle", np.cos)])
    def test_closed_forms(self, name, ref, tight):
        V = catalog_get(name)
        tr = integrate_lift(SplitMetric(V), complex_lift_initial(V, 0.0, [1.0, 0.0], [0.0, 0.0]), 0.0, 3.0, tight)
        z = project(tr)
        t = z.grid
        assert np.max(np.abs(z.positions[:, 0] - ref(t))) <= 1e-7
        assert np.max(np.abs(z.positions[:, 1])) <= 1e-12

    @staticmethod
    def _random_runs(name, cfg):
        rng = np.random.default_rng(3)
        V = catalog_get(name)
        H = f_from_potential(V)
        m = SplitMetric(V)
        for _ in range(20):
            z0, zd0 = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
            tr = integrate_lift(m, complex_lift_initial(V, 0.0, z0, zd0), 0.0, 5.0, cfg)
            yield m, tr, solve_complex(H, 0.0, z0, zd0, 5.0, cfg)

    @pytest.mark.parametrize("name", ["saddle_harmonic", "neg_saddle"])
    def test_random_correspondence(self, name, tight):
        for _, tr, direct in self._random_runs(name, tight):
            gap = np.max(np.abs(project(tr).interp(direct.grid)[:, :2] - direct.positions))
            assert gap <= 1e-7

    def test_norm_drift_bounded_solutions(self, tight):
        for m, tr, _ in self._random_runs("neg_saddle", tight):
            norms = m.norms(tr.states)
            assert np.max(np.abs(norms - norms[0])) <= 1e-8

    def test_norm_drift_relative_on_growing_solutions(self, tight):
        for m, tr, _ in self._random_runs("saddle_harmonic", tight):
            norms = m.norms(tr.states)
            scale = max(1.0, float(np.max(np.abs(tr.states[:, 4]))))
            assert np.max(np.abs(norms - norms[0])) <= 1e-8 * scale

    @pytest.mark.xfail(strict=True, reason="vdot grows like cosh(t)^2 ~ 1e4 on [0, 5]; rtol 1e-10 bounds the relative, not absolute, drift")
    def test_norm_drift_absolute_on_growing_solutions(self, tight):
        for m, tr, _ in self._random_runs("saddle_harmonic", tight):
            norms = m.norms(tr.states)
            assert np.max(np.abs(norms - norms[0])) <= 1e-8


class TestVerifyComplex:
    def test_cosh_passes(self, tight):
        H = f_from_potential(catalog_get("saddle_harmonic"))
        assert verify_complex_solution(solve_complex(H, 0.0, [1.0, 0.0], [0.0, 0.0], 3.0, tight), H).passed

    def test_cos_passes(self, tight):
        H = f_from_potential(catalog_get("neg_saddle"))
        assert verify_complex_solution(solve_complex(H, 0.0, [1.0, 0.0], [0.0, 0.0], 3.0, tight), H).passed

    def test_corrupted_fails(self, tight):
        H = f_from_potential(catalog_get("saddle_harmonic"))
        tr = solve_complex(H, 0.0, [1.0, 0.5], [0.2, 0.3], 2.0, tight)
        states = tr.states.copy()
        states[:, 1] = 0.0
        f = tr.interp.f
        bad = Trajectory(tr.grid, states, HermiteInterpolant(tr.grid, states, f), tr.status, tr.meta)
        rep = verify_complex_solution(bad, H)
        assert not rep.passed and rep.max_residual > 0.1


class TestBlowup:
    def test_z_squared_escapes(self, tight):
        H = f_from_potential(catalog_get("cubic_harmonic_2d"))
        rep = detect_blowup(H, [1.0, 0.0], [0.0, 0.0], 20.0, tight)
        assert rep.blown_up
        lo, hi = rep.t_bracket
        assert lo < hi < 20.0
        # |y| passes 1e8 when xdot ~ 12 / (T - t)^3 does, about 5e-3 before T
        assert BLOWUP_TIME - 1e-2 < lo < hi < BLOWUP_TIME

    def test_linear_is_global(self, tight):
        H = f_from_potential(catalog_get("saddle_harmonic"))
        rep = detect_blowup(H, [1.0, 0.3], [0.2, -0.1], 10.0, tight)
        assert not rep.blown_up and rep.t_bracket is None

    def test_zero_field(self, tight):
        Z = from_function("0", 2, lambda t, x: 0.0, time_independent=True, grad=lambda t, x: np.zeros(2),
                          hess=lambda t, x: np.zeros((2, 2)))
        assert not detect_blowup(f_from_potential(Z), [0, 0], [1, 1], 10.0, tight).blown_up
