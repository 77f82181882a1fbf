import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eisenlift.geometry import geodesic_field_fd
from eisenlift.lift import LiftState, solve_hamiltonian
from eisenlift.odeint import IntegratorConfig
from eisenlift.potentials import catalog_get, squared_potential
from eisenlift.riemlift import (
    C0Warning,
    MarginError,
    RiemannianDualMetric,
    ShootingConfig,
    coe_check,
    integrate_riem,
    riem_geodesic_rhs,
    riem_metric_value,
    shoot_two_point,
    sqrt_lift_initial,
    straight_path_integral,
    verify_sqrt_lift,
)

E = np.eye(4)
vec4 = st.lists(st.floats(-3, 3, allow_nan=False), min_size=4, max_size=4)


class TestDualMetric:
    def test_entries(self):
        m = RiemannianDualMetric(catalog_get("free", n=2))
        assert riem_metric_value(m, np.zeros(4), E[0], E[0]) == pytest.approx(2.0)
        assert riem_metric_value(m, np.zeros(4), E[1], E[1]) == pytest.approx(0.5)
        h = RiemannianDualMetric(catalog_get("harmonic", n=2))
        assert riem_metric_value(h, np.array([0, 0, 1.0, 0]), E[0], E[1]) == pytest.approx(-1.0)

    @given(p=vec4, X=vec4)
    @settings(max_examples=100, deadline=None)
    def test_positive_definite(self, p, X):
        X = np.array(X)
        if np.linalg.norm(X) < 1e-3:
            return
        m = RiemannianDualMetric(catalog_get("time_harmonic", n=2))
        assert riem_metric_value(m, np.array(p), X, X) > 0

    def test_vt_block_unit_determinant(self, rng):
        m = RiemannianDualMetric(catalog_get("harmonic", n=2))
        for _ in range(10):
            assert np.linalg.det(m.matrix(rng.uniform(-2, 2, 4))[:2, :2]) == pytest.approx(1.0)


class TestDualRhs:
    def test_free(self):
        m = RiemannianDualMetric(catalog_get("free", n=2))
        d = riem_geodesic_rhs(m, LiftState(np.zeros(4), np.array([0.5, 1.0, 0.3, 0.2])))
        np.testing.assert_allclose(d.qdot, np.zeros(4), atol=1e-15)

    def test_harmonic_plugin(self):
        m = RiemannianDualMetric(catalog_get("harmonic", n=2))
        q = np.array([0, 0, 1.0, 0])
        # c0 = 2 vdot - 2 V tdot = 1 with tdot = 2, V = 1/2
        st0 = LiftState(q, np.array([1.5, 2.0, 0.0, 0.0]))
        d = riem_geodesic_rhs(m, st0, c0=1.0)
        np.testing.assert_allclose(d.qdot[2:], [-2.0, 0.0])
        assert d.qdot[1] == pytest.approx(0.0)

    def test_inconsistent_c0_rejected(self):
        m = RiemannianDualMetric(catalog_get("harmonic", n=1))
        with pytest.raises(ValueError):
            riem_geodesic_rhs(m, LiftState(np.array([0, 0, 1.0]), np.array([1.5, 2.0, 0.0])), c0=3.0)

    def test_matches_fd(self, rng):
        m = RiemannianDualMetric(catalog_get("time_harmonic", n=2))
        fd = geodesic_field_fd(m)
        for _ in range(50):
            y = np.r_[rng.uniform(-1, 1, 4), rng.normal(size=4)]
            an = m.geodesic_field(m.c0(y[:4], y[4:]))
            assert np.max(np.abs(an(0, y) - fd(0, y))) <= 1e-6


class TestSqrtLift:
    def test_initial_harmonic(self):
        st0 = sqrt_lift_initial(catalog_get("harmonic", n=2), [1.0, 0.0], [0.0, 0.0], 1.0, 0.0)
        assert st0.qdot[1] == pytest.approx(1.0) and st0.qdot[0] == pytest.approx(1.0)

    def test_initial_free(self):
        st0 = sqrt_lift_initial(catalog_get("free", n=1), [0.0], [1.0], 1.0, 0.5)
        assert st0.qdot[1] == pytest.approx(1.0) and st0.qdot[0] == pytest.approx(0.5)

    def test_c0_zero_flagged(self):
        V = catalog_get("harmonic", n=1)
        with pytest.warns(C0Warning):
            st0 = sqrt_lift_initial(V, [1.0], [0.0], 0.0, 0.5)
        assert st0.qdot[1] == pytest.approx(1.0)
        assert st0.qdot[0] == pytest.approx(V.eval(0.0, np.array([1.0])))

    def test_time_dependent_rejected(self):
        with pytest.raises(ValueError):
            sqrt_lift_initial(catalog_get("time_harmonic"), [1.0], [0.0], 1.0, 0.0)

    def test_harmonic_quartic_side(self, tight):
        rep = verify_sqrt_lift(catalog_get("harmonic", n=2), [1.0, 0.0], [0.0, 0.0], 1.0, 0.0, 5.0, 1e-6, tight)
        assert rep.passed
        assert rep.c0_drift <= 1e-9 and rep.norm_drift <= 1e-8 and rep.sqrt_drift <= 1e-8 and rep.coe_drift <= 1e-7
        Q = catalog_get("quartic_of_harmonic", {"c0": 1.0, "c1": 0.0}, 2)
        direct = solve_hamiltonian(Q, 0.0, [1.0, 0.0], [0.0, 0.0], 5.0, tight)
        assert np.max(np.abs(direct.interp(rep.direct.grid) - rep.direct.states)) <= 1e-8

    def test_free(self, tight):
        rep = verify_sqrt_lift(catalog_get("free", n=1), [0.0], [1.0], 1.0, 0.0, 5.0, 1e-12, tight)
        assert rep.passed

    def test_linear_sqrt2_frequency(self, tight):
        rep = verify_sqrt_lift(catalog_get("linear", {"b": [1.0]}), [1.0], [0.0], 1.0, 0.0, 5.0, 1e-6, tight)
        assert rep.passed
        t = rep.direct.grid
        assert np.max(np.abs(rep.direct.positions[:, 0] - np.cos(np.sqrt(2) * t))) <= 1e-8

    def test_c0_conserved(self, tight, rng):
        V = catalog_get("anisotropic_harmonic", n=2)
        m = RiemannianDualMetric(V)
        st0 = LiftState(np.r_[0.0, 0.0, rng.uniform(-1, 1, 2)], rng.normal(size=4))
        c0 = m.c0(st0.q, st0.qdot)
        geo = integrate_riem(m, st0, 0.0, 5.0, tight, c0)
        assert np.max(np.abs(m.c0_values(geo.states) - c0)) <= 1e-9
        assert coe_check(geo)["drift"] <= 1e-7


class TestShooting:
    def test_straight_path_integral(self):
        assert straight_path_integral(catalog_get("harmonic"), [0.0], [1.0]) == pytest.approx(1.0 / 6.0)
        assert straight_path_integral(catalog_get("free"), [0.0], [1.0]) == 0.0

    def test_free(self):
        r = shoot_two_point(catalog_get("free"), [0.0], [1.0], 0.7)
        assert r.newton_steps <= 2 and r.terminal_gap <= 1e-8
        tau = r.tau
        assert np.max(np.abs(np.diff(tau, 2))) <= 1e-10 or np.allclose(np.diff(tau) / np.diff(r.tau_grid), (tau[-1] - tau[0]) / (r.tau_grid[-1] - r.tau_grid[0]))
        assert coe_check(r)["drift"] <= 1e-10

    def test_harmonic_squared_oracle(self):
        V = catalog_get("harmonic")
        v1 = straight_path_integral(V, [0.0], [1.0]) + 0.5
        r = shoot_two_point(V, [0.0], [1.0], v1)
        assert r.terminal_gap <= 1e-8
        assert r.v1_margin >= 0.1
        assert r.v2_gap <= 1e-5
        assert r.tv_residual <= 1e-5
        assert coe_check(r)["drift"] <= 1e-7
        assert r.c0_rescaled == pytest.approx(1.0, abs=1e-9)
        # independent integration of x'' = -grad (V + cbar)^2
        cbar = r.c - V.eval(0.0, np.array([0.0]))
        W = squared_potential(V, 1.0, cbar)
        xc = r.x_curve
        direct = solve_hamiltonian(W, xc.grid[0], xc.positions[0], xc.velocities[0], xc.grid[-1],
                                   IntegratorConfig(rtol=1e-11, atol=1e-11))
        assert np.max(np.abs(direct.interp(xc.grid)[:, 0] - xc.positions[:, 0])) <= 1e-5

    def test_time_harmonic(self):
        V = catalog_get("time_harmonic")
        v1 = straight_path_integral(V, [0.0], [1.0]) + 0.5
        r = shoot_two_point(V, [0.0], [1.0], v1)
        assert r.terminal_gap <= 1e-8 and r.tv_residual <= 1e-5 and r.coe_drift <= 1e-7
        assert r.v2_gap is None

    def test_degenerate_rejected(self):
        with pytest.raises(MarginError) as info:
            shoot_two_point(catalog_get("free"), [0.0], [1.0], 0.0)
        assert "non-degeneracy" in str(info.value)
        assert info.value.margin == 0.0

    def test_alternates_collected(self):
        cfg = ShootingConfig(collect_alternates=True, n_perturb=3)
        r = shoot_two_point(catalog_get("harmonic"), [0.0], [1.0], 0.7, cfg)
        assert r.start_index == 0
        assert isinstance(r.alternates, list)

    def test_dimension_checked(self):
        with pytest.raises(ValueError):
            shoot_two_point(catalog_get("harmonic"), [0.0, 0.0], [1.0], 0.7)
