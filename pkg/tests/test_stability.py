import math

import numpy as np
import pytest

from eisenlift.conformal import reparametrize
from eisenlift.lift import BrinkmannMetric, eisenhart_lift_initial, integrate_lift, solve_hamiltonian
from eisenlift.potentials import catalog_get
from eisenlift.stability import (
    NotGeodesicError,
    check_accumulation_hypotheses,
    check_focusing_bound,
    conjugate_points,
    generic_conjugate_points,
    jacobi_matrix,
    variation_family,
)

PI = math.pi


def _base(name, x0, xd0, t1, cfg, n=None):
    V = catalog_get(name, n=n)
    return V, solve_hamiltonian(V, 0.0, x0, xd0, t1, cfg)


class TestReduced:
    def test_harmonic_1d(self, tight):
        V, base = _base("harmonic", [1.0], [0.0], 7.0, tight)
        rep = conjugate_points(V, base)
        assert rep.multiplicities == [1, 1]
        np.testing.assert_allclose(rep.times, [PI, 2 * PI], atol=1e-6)
        assert rep.events[0].kernel.shape == (1, 1)

    def test_harmonic_2d_multiplicity_two(self, tight):
        V, base = _base("harmonic", [1.0, 0.0], [0.0, 0.5], 4.0, tight, n=2)
        rep = conjugate_points(V, base)
        assert rep.multiplicities == [2]
        assert rep.times[0] == pytest.approx(PI, abs=1e-6)

    def test_anisotropic(self, tight):
        V = catalog_get("anisotropic_harmonic", {"k": [1.0, 4.0]}, 2)
        base = solve_hamiltonian(V, 0.0, [1.0, 1.0], [0.0, 0.0], 6.5, tight)
        rep = conjugate_points(V, base)
        np.testing.assert_allclose(rep.times, [PI / 2, PI, 3 * PI / 2, 2 * PI], atol=1e-6)
        assert rep.multiplicities == [1, 2, 1, 2]

    def test_free_none(self, tight):
        V, base = _base("free", [0.0, 0.0], [1.0, 0.0], 10.0, tight, n=2)
        rep = conjugate_points(V, base)
        assert rep.events == []
        assert np.all(rep.det_trace[1:, 1] > 0)

    def test_matrix_properties(self, tight):
        V, base = _base("anisotropic_harmonic", [1.0, -0.5], [0.2, 0.3], 5.0, tight, n=2)
        run = jacobi_matrix(V, base, None, None, tight, None)
        worst = 0.0
        for y in run.out.states:
            M, Md = run.matrix(y), run.matrix_rate(y)
            worst = max(worst, np.max(np.abs(M.T @ Md - Md.T @ M)))
        assert worst <= 1e-8
        s = run.out.grid
        small = (s > 0) & (s < 0.5)
        assert all(np.linalg.det(run.matrix(y)) > 0 for y in run.out.states[small])

    def test_report_json(self, tight):
        V, base = _base("harmonic", [1.0], [0.0], 4.0, tight)
        d = conjugate_points(V, base).as_dict()
        assert d["interval"] == [0.0, 4.0]
        assert d["events"][0]["multiplicity"] == 1
        assert len(d["det_samples"]) > 10


class TestGeneric:
    def test_matches_reduced(self, tight):
        V = catalog_get("harmonic", n=1)
        m = BrinkmannMetric(V)
        lift = integrate_lift(m, eisenhart_lift_initial(V, 0.0, [1.0], [0.0]), 0.0, 7.0, tight)
        g = generic_conjugate_points(m, lift)
        np.testing.assert_allclose(g.times, [PI, 2 * PI], atol=1e-5)
        assert g.multiplicities == [1, 1]

    def test_flat_none(self, tight):
        V = catalog_get("free", n=1)
        m = BrinkmannMetric(V)
        lift = integrate_lift(m, eisenhart_lift_initial(V, 0.0, [0.0], [1.0]), 0.0, 6.0, tight)
        assert generic_conjugate_points(m, lift).events == []

    def test_conformal_invariance(self, tight):
        V = catalog_get("harmonic", n=1)
        m = BrinkmannMetric(V)
        lift = integrate_lift(m, eisenhart_lift_initial(V, 0.0, [1.0], [0.0]), 0.0, 7.0, tight)
        rmap, rep = reparametrize(lift, "constant:0.3")
        g = generic_conjugate_points(rep.meta["metric"], rep)
        np.testing.assert_allclose(g.times, [rmap(PI), rmap(2 * PI)], atol=1e-4)

    def test_rejects_non_geodesic(self, tight):
        V = catalog_get("harmonic", n=1)
        m = BrinkmannMetric(V)
        lift = integrate_lift(BrinkmannMetric(catalog_get("free", n=1)), eisenhart_lift_initial(V, 0.0, [1.0], [0.0]), 0.0, 2.0, tight)
        with pytest.raises(NotGeodesicError):
            generic_conjugate_points(m, lift)


class TestVariation:
    def test_reconvergence_at_pi(self, tight):
        V, base = _base("harmonic", [1.0], [0.0], 4.0, tight)
        fam = variation_family(V, base, [1.0], 0.05, 5, tight)
        assert fam.spread_at(PI) / 0.05 <= 0.05
        assert fam.spread_at(PI / 2) / 0.05 == pytest.approx(1.0, abs=1e-6)

    def test_members_closed_form(self, tight):
        V, base = _base("harmonic", [1.0], [0.0], 4.0, tight)
        fam = variation_family(V, base, [1.0], 0.05, 3, tight)
        for s, mbr in zip(fam.s_values, fam.members):
            t = mbr.grid
            assert np.max(np.abs(mbr.positions[:, 0] - (np.cos(t) + s * np.sin(t)))) <= 1e-8

    def test_free_diverges_linearly(self, tight):
        V, base = _base("free", [0.0], [1.0], 5.0, tight)
        fam = variation_family(V, base, [1.0], 0.05, 5, tight)
        for t in (1.0, 3.0, 5.0):
            assert fam.spread_at(t) == pytest.approx(0.05 * t, rel=1e-8)

    def test_kernel_direction_accumulates(self, tight):
        V = catalog_get("anisotropic_harmonic", {"k": [1.0, 4.0]}, 2)
        base = solve_hamiltonian(V, 0.0, [1.0, 1.0], [0.0, 0.0], 2.0, tight)
        ev = conjugate_points(V, base).events[0]
        fam = variation_family(V, base, ev.kernel[:, 0], 0.05, 5, tight)
        assert fam.spread_at(ev.t_conj) / 0.05 <= 10 * 0.05

    def test_argument_checks(self, tight):
        V, base = _base("harmonic", [1.0], [0.0], 2.0, tight)
        with pytest.raises(ValueError):
            variation_family(V, base, [0.0], 0.05)
        with pytest.raises(ValueError):
            variation_family(V, base, [1.0], 0.05, k=4)


class TestHypotheses:
    def test_focusing_harmonic(self, tight):
        V, base = _base("harmonic", [1.0, 0.0], [0.0, 0.0], 5.0, tight, n=2)
        rep = check_focusing_bound(V, base, 5.0)
        assert rep.holds and rep.min_laplacian == pytest.approx(2.0)
        assert rep.bound == pytest.approx(PI**2 / 25)

    def test_focusing_free_and_saddle(self, tight):
        V, base = _base("free", [0.0], [1.0], 5.0, tight)
        assert not check_focusing_bound(V, base, 5.0, dim_constant=1.0).holds
        S, sb = _base("saddle_harmonic", [1.0, 0.0], [0.0, 0.0], 5.0, tight)
        rep = check_focusing_bound(S, sb, 5.0)
        assert rep.min_laplacian == pytest.approx(0.0, abs=1e-14) and rep.bound > 0 and not rep.holds

    def test_accumulation_harmonic(self, tight):
        V, base = _base("harmonic", [1.0], [0.0], 4.0, tight)
        rep = check_accumulation_hypotheses(V, base)
        assert rep.t0_found == 0.0 and rep.i == 0
        assert rep.Vij_nonzero and rep.laplacian_nonneg and rep.all_hold

    def test_accumulation_free(self, tight):
        V, base = _base("free", [0.0], [1.0], 4.0, tight)
        rep = check_accumulation_hypotheses(V, base)
        assert not rep.Vij_nonzero and not rep.all_hold

    def test_accumulation_saddle(self, tight):
        V, base = _base("saddle_harmonic", [1.0, 0.0], [0.0, 0.0], 4.0, tight)
        assert np.max(np.abs(base.positions[:, 0] - np.cos(base.grid))) <= 1e-8
        rep = check_accumulation_hypotheses(V, base)
        assert rep.t0_found == 0.0 and rep.all_hold
        assert rep.min_laplacian == pytest.approx(0.0, abs=1e-14)

    def test_interior_turning_point(self, tight):
        V, base = _base("harmonic", [0.0], [1.0], 4.0, tight)
        rep = check_accumulation_hypotheses(V, base)
        assert rep.t0_found == pytest.approx(PI / 2, abs=1e-9)
