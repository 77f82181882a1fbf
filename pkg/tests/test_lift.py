import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eisenlift.geometry import christoffel_fd
from eisenlift.lift import (
    LIGHTLIKE,
    UNIT_SPACELIKE,
    UNIT_TIMELIKE,
    BrinkmannMetric,
    DegenerateLiftError,
    LiftState,
    Trajectory,
    causal_class,
    christoffel,
    eisenhart_lift_initial,
    geodesic_rhs,
    integrate_lift,
    metric_value,
    project,
    solve_hamiltonian,
    verify_lift,
)
from eisenlift.odeint import IntegratorConfig, OdeSystem, integrate
from eisenlift.potentials import catalog_get

E_V, E_T = np.eye(4)[0], np.eye(4)[1]


def _harmonic_lift(cfg, t1=10.0, c="lightlike"):
    V = catalog_get("harmonic", n=1)
    m = BrinkmannMetric(V)
    return V, m, integrate_lift(m, eisenhart_lift_initial(V, 0.0, [1.0], [0.0], c), 0.0, t1, cfg)


class TestCausalClass:
    def test_constants(self):
        assert (LIGHTLIKE.epsilon, UNIT_TIMELIKE.epsilon, UNIT_SPACELIKE.epsilon) == (0.0, -0.5, 0.5)
        assert (LIGHTLIKE.norm_target, UNIT_TIMELIKE.norm_target, UNIT_SPACELIKE.norm_target) == (0.0, -1.0, 1.0)

    def test_lookup(self):
        assert causal_class("unit_timelike") is UNIT_TIMELIKE
        assert causal_class(LIGHTLIKE) is LIGHTLIKE
        with pytest.raises(ValueError):
            causal_class("null")


class TestMetricValue:
    def test_dv_is_lightlike(self):
        m = BrinkmannMetric(catalog_get("free", n=2))
        assert metric_value(m, np.zeros(4), E_V, E_V) == 0.0

    def test_dt_norm_reads_potential(self):
        m = BrinkmannMetric(catalog_get("harmonic", n=2))
        assert metric_value(m, np.array([0, 0, 1.0, 0]), E_T, E_T) == pytest.approx(-1.0)

    def test_cross_term(self):
        m = BrinkmannMetric(catalog_get("free", n=2))
        X = E_V + E_T
        assert metric_value(m, np.zeros(4), X, X) == pytest.approx(2.0)

    def test_anisotropic_signature(self):
        m = BrinkmannMetric(catalog_get("free", n=2), a=[2.0, -0.5])
        assert not m.lorentzian
        np.testing.assert_allclose(np.diag(m.matrix(np.zeros(4)))[2:], [2.0, -0.5])
        with pytest.raises(ValueError):
            BrinkmannMetric(catalog_get("free", n=2), a=[1.0, 0.0])


class TestChristoffel:
    def test_free_zero(self):
        tab = christoffel(BrinkmannMetric(catalog_get("free", n=2)), np.zeros(4))
        assert not np.any(tab.dense())

    def test_harmonic_values(self):
        tab = christoffel(BrinkmannMetric(catalog_get("harmonic", n=2)), np.array([0, 0, 1.0, 0]))
        assert tab.i_tt[0] == pytest.approx(1.0)
        assert tab.v_it[0] == pytest.approx(-1.0)
        assert tab.v_tt == 0.0

    def test_time_harmonic_vtt(self):
        V = catalog_get("time_harmonic", {"epsilon": 0.5, "omega": 1.0}, 2)
        m = BrinkmannMetric(V)
        p = np.array([0, 0, 1.0, 0])
        assert christoffel(m, p).v_tt == pytest.approx(-0.25)
        np.testing.assert_allclose(christoffel(m, p).dense(), christoffel_fd(m, p), atol=1e-8)

    def test_fd_agreement_random(self, rng):
        for a in (None, [2.0, -0.5]):
            m = BrinkmannMetric(catalog_get("time_harmonic", n=2), a=a)
            for _ in range(50):
                p = rng.uniform(-1.5, 1.5, 4)
                assert np.max(np.abs(m.christoffel(p).dense() - christoffel_fd(m, p))) <= 1e-6


class TestGeodesicRhs:
    def test_free_straight(self):
        m = BrinkmannMetric(catalog_get("free", n=2))
        d = geodesic_rhs(m, LiftState(np.zeros(4), np.array([0.3, 1.0, 0.2, -0.1])))
        np.testing.assert_array_equal(d.qdot, np.zeros(4))

    def test_harmonic_plugin(self):
        m = BrinkmannMetric(catalog_get("harmonic", n=2))
        d = geodesic_rhs(m, LiftState(np.array([0, 0, 1.0, 0]), np.array([0.5, 1.0, 0, 0])))
        np.testing.assert_allclose(d.qdot, [0.0, 0.0, -1.0, 0.0])

    def test_tdot_squared_scaling(self):
        m = BrinkmannMetric(catalog_get("harmonic", n=2))
        q = np.array([0, 0, 1.0, 0.5])
        a1 = geodesic_rhs(m, LiftState(q, np.array([0.0, 1.0, 0, 0]))).qdot[2:]
        a2 = geodesic_rhs(m, LiftState(q, np.array([0.0, 2.0, 0, 0]))).qdot[2:]
        np.testing.assert_allclose(a2, 4 * a1)


class TestInitialData:
    def test_lightlike(self):
        V = catalog_get("harmonic", n=2)
        st0 = eisenhart_lift_initial(V, 0.0, [1.0, 0.0], [0.0, 0.0])
        assert st0.qdot[0] == pytest.approx(0.5)
        assert metric_value(BrinkmannMetric(V), st0.q, st0.qdot, st0.qdot) == pytest.approx(0.0, abs=1e-15)

    def test_timelike(self):
        V = catalog_get("harmonic", n=2)
        st0 = eisenhart_lift_initial(V, 0.0, [1.0, 0.0], [0.0, 0.0], "unit_timelike")
        assert st0.qdot[0] == pytest.approx(0.0)
        assert metric_value(BrinkmannMetric(V), st0.q, st0.qdot, st0.qdot) == pytest.approx(-1.0)

    def test_free_moving(self):
        st0 = eisenhart_lift_initial(catalog_get("free", n=2), 0.0, [0.0, 0.0], [1.0, 0.0])
        assert st0.qdot[0] == pytest.approx(-0.5)

    def test_dimension_check(self):
        with pytest.raises(ValueError):
            eisenhart_lift_initial(catalog_get("free", n=2), 0.0, [0.0], [1.0])

    @given(
        x=st.lists(st.floats(-2, 2), min_size=2, max_size=2),
        xd=st.lists(st.floats(-2, 2), min_size=2, max_size=2),
        c=st.sampled_from(["lightlike", "unit_timelike", "unit_spacelike"]),
    )
    @settings(max_examples=60, deadline=None)
    def test_norm_matches_class(self, x, xd, c):
        V = catalog_get("anisotropic_harmonic", n=2)
        m = BrinkmannMetric(V)
        st0 = eisenhart_lift_initial(V, 0.0, x, xd, c)
        assert metric_value(m, st0.q, st0.qdot, st0.qdot) == pytest.approx(causal_class(c).norm_target, abs=1e-12)


class TestIntegrateAndProject:
    def test_free_straight_line(self, tight):
        V = catalog_get("free", n=2)
        m = BrinkmannMetric(V)
        tr = integrate_lift(m, eisenhart_lift_initial(V, 0.0, [0.0, 1.0], [1.0, -0.5]), 0.0, 4.0, tight)
        np.testing.assert_allclose(tr.positions[:, 2], tr.grid, atol=1e-12)
        assert np.max(np.abs(m.norms(tr.states))) <= 1e-12

    def test_harmonic_cosine(self, tight):
        _, _, tr = _harmonic_lift(tight)
        assert np.max(np.abs(tr.positions[:, 2] - np.cos(tr.grid))) <= 1e-8

    def test_negative_anisotropy_gives_cosh(self, tight):
        V = catalog_get("harmonic", n=1)
        m = BrinkmannMetric(V, a=[-1.0])
        tr = integrate_lift(m, eisenhart_lift_initial(V, 0.0, [1.0], [0.0], a=[-1.0]), 0.0, 3.0, tight)
        assert np.max(np.abs(tr.positions[:, 2] - np.cosh(tr.grid))) <= 1e-7

    def test_project_recovers_base(self, tight):
        _, _, tr = _harmonic_lift(tight)
        base = project(tr)
        t = base.grid
        assert np.max(np.abs(base.positions[:, 0] - np.cos(t))) <= 1e-8
        assert np.max(np.abs(base.velocities[:, 0] + np.sin(t))) <= 1e-8
        assert base.meta["kind"] == "base"

    def test_project_rejects_zero_tdot(self, tight):
        m = BrinkmannMetric(catalog_get("free", n=1))
        st0 = LiftState(np.zeros(3), np.array([1.0, 0.0, 1.0]))
        tr = integrate_lift(m, st0, 0.0, 1.0, tight)
        with pytest.raises(DegenerateLiftError):
            project(tr)

    def test_conservation_laws(self, tight, rng):
        V = catalog_get("time_harmonic", n=2)
        m = BrinkmannMetric(V)
        for c in ("lightlike", "unit_timelike", "unit_spacelike"):
            st0 = eisenhart_lift_initial(V, 0.0, rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2), c)
            tr = integrate_lift(m, st0, 0.0, 10.0, tight)
            norms = m.norms(tr.states)
            assert np.max(np.abs(norms - norms[0])) <= 1e-8
            assert np.max(np.abs(tr.states[:, 5] - 1.0)) <= 1e-10
            # g(d_v, gamma') = tdot, computed through the metric
            dv = np.array([metric_value(m, y[:4], E_V, y[4:]) for y in tr.states[::10]])
            assert np.max(np.abs(dv - 1.0)) <= 1e-10

    def test_from_output_requires_interpolant(self, tight):
        out = integrate(OdeSystem(2, lambda s, y: np.zeros(2)), [0.0, 0.0], 0.0, 1.0, tight)
        tr = Trajectory.from_output(out, kind="x")
        assert tr.meta["kind"] == "x"
        assert tr.domain == (0.0, 1.0)


class TestVerifyLift:
    def test_harmonic_passes(self, tight):
        V, _, tr = _harmonic_lift(tight, 5.0)
        base = solve_hamiltonian(V, 0.0, [1.0], [0.0], 5.0, tight)
        rep = verify_lift(V, base, tr, 1e-6)
        assert rep.passed
        assert rep.max_x_gap <= 1e-8

    def test_mismatched_velocity_fails(self, tight):
        V, _, tr = _harmonic_lift(tight, 5.0)
        base = solve_hamiltonian(V, 0.0, [1.0], [0.1], 5.0, tight)
        rep = verify_lift(V, base, tr, 1e-6)
        assert not rep.passed
        assert rep.max_x_gap == pytest.approx(0.1, rel=1e-3)

    def test_free_machine_precision(self, tight):
        V = catalog_get("free", n=2)
        m = BrinkmannMetric(V)
        tr = integrate_lift(m, eisenhart_lift_initial(V, 0.0, [0.0, 0.0], [1.0, 2.0]), 0.0, 5.0, tight)
        base = solve_hamiltonian(V, 0.0, [0.0, 0.0], [1.0, 2.0], 5.0, tight)
        rep = verify_lift(V, base, tr, 1e-6)
        assert rep.passed and rep.max_x_gap <= 1e-12

    @pytest.mark.parametrize("name", ["free", "linear", "harmonic", "anisotropic_harmonic", "time_harmonic", "quartic_of_harmonic"])
    def test_catalog_random(self, name, tight):
        rng = np.random.default_rng(7)
        V = catalog_get(name)
        m = BrinkmannMetric(V)
        for _ in range(5):
            x0, xd0 = rng.uniform(-1, 1, V.n), rng.uniform(-1, 1, V.n)
            tr = integrate_lift(m, eisenhart_lift_initial(V, 0.0, x0, xd0), 0.0, 5.0, tight)
            base = solve_hamiltonian(V, 0.0, x0, xd0, 5.0, tight)
            assert verify_lift(V, base, tr, 1e-6).passed
