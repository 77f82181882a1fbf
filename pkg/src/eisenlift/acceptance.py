"""The acceptance suite: eleven property checks against closed-form or independent oracles.

Each ``criterion_k`` returns a :class:`CriterionResult`; :func:`run_all`
executes them in order. Thresholds are fixed here and never relaxed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .complexlift import SplitMetric, complex_lift_initial, detect_blowup, f_from_potential
from .conformal import ConformalMetric, conformal_factor, reparametrize, run_conformal_check
from .geometry import christoffel_fd, geodesic_field_fd
from .lift import (
    BrinkmannMetric,
    causal_class,
    eisenhart_lift_initial,
    integrate_lift,
    project,
    solve_hamiltonian,
    verify_lift,
)
from .odeint import IntegratorConfig
from .potentials import catalog_get, squared_potential
from .riemlift import MarginError, RiemannianDualMetric, shoot_two_point, straight_path_integral, verify_sqrt_lift
from .stability import (
    check_accumulation_hypotheses,
    conjugate_points,
    generic_conjugate_points,
    variation_family,
)

__all__ = ["CriterionResult", "CRITERIA", "run_all", "format_line"]

TOL10 = IntegratorConfig(rtol=1e-10, atol=1e-10)
PI = np.pi


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    elapsed: float = 0.0
    budget: float | None = None

    def as_dict(self) -> dict:
        return {
            "criterion": self.number,
            "name": self.name,
            "pass": self.passed,
            "elapsed_s": self.elapsed,
            "budget_s": self.budget,
            "details": self.details,
        }


def format_line(r: CriterionResult) -> str:
    verdict = "PASS" if r.passed else "FAIL"
    return f"[{verdict}] criterion {r.number:2d} {r.name} ({r.elapsed:.2f}s)"


def _timed(number: int, name: str, budget: float | None = None):
    def wrap(fn):
        def run(seed: int = 0) -> CriterionResult:
            t = time.perf_counter()
            passed, details = fn(seed)
            elapsed = time.perf_counter() - t
            if budget is not None and elapsed > budget:
                passed = False
                details["over_budget"] = True
            return CriterionResult(number, name, bool(passed), details, elapsed, budget)

        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


LIFT_POTENTIALS = ("free", "linear", "harmonic", "anisotropic_harmonic", "time_harmonic")
CAUSAL = ("lightlike", "unit_timelike", "unit_spacelike")


@lru_cache(maxsize=4)
def _lift_sweep(seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    rows = []
    t_start = time.perf_counter()
    for name in LIFT_POTENTIALS:
        V = catalog_get(name, n=2)
        m = BrinkmannMetric(V)
        for _ in range(20):
            x0 = rng.uniform(-1, 1, 2)
            xd0 = rng.uniform(-1, 1, 2)
            base = solve_hamiltonian(V, 0.0, x0, xd0, 5.0, TOL10)
            for c in CAUSAL:
                lifted = integrate_lift(m, eisenhart_lift_initial(V, 0.0, x0, xd0, c), 0.0, 5.0, TOL10)
                rep = verify_lift(V, base, lifted, 1e-6)
                td = lifted.states[:, m.dim + 1]
                rows.append((name, c, rep.max_x_gap, rep.max_norm_drift, rep.max_hamiltonian_residual,
                             rep.passed, float(np.max(np.abs(td - td[0]))), lifted.status))
    return tuple(rows), time.perf_counter() - t_start


@_timed(1, "lift correspondence", budget=30.0)
def criterion_1(seed):
    rows, elapsed = _lift_sweep(seed)
    failures = [r[:2] for r in rows if not r[5] or r[7] != "completed"]
    details = {
        "runs": len(rows),
        "failures": failures,
        "max_x_gap": max(r[2] for r in rows),
        "max_hamiltonian_residual": max(r[4] for r in rows),
        "sweep_seconds": elapsed,
    }
    return len(rows) == 300 and not failures and elapsed <= 30.0, details


@_timed(2, "causal norm and affinity conservation")
def criterion_2(seed):
    rows, _ = _lift_sweep(seed)
    norm = max(r[3] for r in rows)
    aff = max(r[6] for r in rows)
    return norm <= 1e-8 and aff <= 1e-10, {"max_norm_drift": norm, "max_tdot_drift": aff}


_CONFORMAL_BASES = {
    1: (np.array([1.0]), np.array([0.0])),
    2: (np.array([1.0, 0.5]), np.array([0.0, 0.3])),
}


@_timed(3, "conformal class", budget=30.0)
def criterion_3(seed):
    details = {}
    ok = True
    for n, (x0, xd0) in _CONFORMAL_BASES.items():
        V = catalog_get("harmonic", n=n)
        base = solve_hamiltonian(V, 0.0, x0, xd0, 5.0, TOL10)
        for f in ("zero", "constant:0.3", "linear_x:0.1"):
            rep = run_conformal_check(BrinkmannMetric(V), f, base, TOL10, 1e-6).report
            good = rep.passed and rep.max_conformal_norm <= 1e-7
            ok &= good
            details[f"n={n} {f}"] = {
                "max_curve_gap": rep.max_curve_gap,
                "max_conformal_norm": rep.max_conformal_norm,
                "pass": good,
            }
    return ok, details


def _near(found, expected, tol):
    return len(found) == len(expected) and all(abs(a - b) <= tol for a, b in zip(found, expected))


@_timed(4, "conjugate points", budget=20.0)
def criterion_4(seed):
    details = {}
    H1 = catalog_get("harmonic", n=1)
    b1 = solve_hamiltonian(H1, 0.0, [1.0], [0.0], 7.0, TOL10)
    r1 = conjugate_points(H1, b1)
    ok1 = _near(r1.times, [PI, 2 * PI], 1e-6) and r1.multiplicities == [1, 1]
    g1 = generic_conjugate_points(
        BrinkmannMetric(H1), integrate_lift(BrinkmannMetric(H1), eisenhart_lift_initial(H1, 0.0, [1.0], [0.0]), 0.0, 7.0, TOL10)
    )
    agree1 = _near(g1.times, r1.times, 1e-4) and g1.multiplicities == r1.multiplicities

    H2 = catalog_get("harmonic", n=2)
    x0, xd0 = np.array([1.0, 0.0]), np.array([0.0, 0.5])
    b2 = solve_hamiltonian(H2, 0.0, x0, xd0, 4.0, TOL10)
    r2 = conjugate_points(H2, b2)
    ok2 = _near(r2.times, [PI], 1e-6) and r2.multiplicities == [2]
    g2 = generic_conjugate_points(
        BrinkmannMetric(H2), integrate_lift(BrinkmannMetric(H2), eisenhart_lift_initial(H2, 0.0, x0, xd0), 0.0, 4.0, TOL10)
    )
    agree2 = _near(g2.times, r2.times, 1e-4) and g2.multiplicities == r2.multiplicities
    details.update(
        n1_events=r1.times, n1_mult=r1.multiplicities, n1_generic=g1.times,
        n2_events=r2.times, n2_mult=r2.multiplicities, n2_generic=g2.times, n2_generic_mult=g2.multiplicities,
    )
    return ok1 and ok2 and agree1 and agree2, details


@_timed(5, "conformal invariance of conjugate points")
def criterion_5(seed):
    details = {}
    ok = True
    for n, t1, expect, mult in ((1, 7.0, [PI, 2 * PI], [1, 1]), (2, 4.0, [PI], [2])):
        V = catalog_get("harmonic", n=n)
        x0, xd0 = _CONFORMAL_BASES[n]
        m = BrinkmannMetric(V)
        lift = integrate_lift(m, eisenhart_lift_initial(V, 0.0, x0, xd0), 0.0, t1, TOL10)
        rmap, rep = reparametrize(lift, "linear_x:0.1")
        g = generic_conjugate_points(rep.meta["metric"], rep)
        target = [float(rmap(t)) for t in expect]
        good = _near(g.times, target, 1e-4) and g.multiplicities == mult
        ok &= good
        details[f"n={n}"] = {"events": g.times, "expected": target, "multiplicities": g.multiplicities, "pass": good}
    return ok, details


@_timed(6, "accumulation of a variation family")
def criterion_6(seed):
    eps = 0.05
    H = catalog_get("harmonic", n=1)
    base = solve_hamiltonian(H, 0.0, [1.0], [0.0], 4.0, TOL10)
    fam = variation_family(H, base, [1.0], eps, 5, TOL10)
    at_pi = fam.spread_at(PI) / eps
    at_half = fam.spread_at(PI / 2) / eps
    return at_pi <= 10 * eps and 0.9 <= at_half <= 1.1, {"spread_pi_over_eps": at_pi, "spread_half_pi_over_eps": at_half}


@_timed(7, "accumulation hypotheses pipeline")
def criterion_7(seed):
    H = catalog_get("harmonic", n=1)
    bh = solve_hamiltonian(H, 0.0, [1.0], [0.0], 10.0, TOL10)
    S = catalog_get("saddle_harmonic")
    bs = solve_hamiltonian(S, 0.0, [1.0, 0.0], [0.0, 0.0], 10.0, TOL10)
    F = catalog_get("free", n=1)
    bf = solve_hamiltonian(F, 0.0, [0.0], [1.0], 10.0, TOL10)
    ah, as_, af = (check_accumulation_hypotheses(V, b) for V, b in ((H, bh), (S, bs), (F, bf)))
    eh = conjugate_points(H, bh).times
    es = conjugate_points(S, bs).times
    ok = ah.all_hold and as_.all_hold and not af.all_hold and len(eh) > 0 and len(es) > 0
    return ok, {
        "harmonic": ah.as_dict(), "saddle": as_.as_dict(), "free": af.as_dict(),
        "harmonic_events": eh, "saddle_events": es,
    }


@_timed(8, "complex lift")
def criterion_8(seed):
    details = {}
    ts = np.linspace(0.0, 3.0, 301)
    ok = True
    for name, ref in (("saddle_harmonic", np.cosh), ("neg_saddle", np.cos)):
        V = catalog_get(name)
        tr = integrate_lift(SplitMetric(V), complex_lift_initial(V, 0.0, [1.0, 0.0], [0.0, 0.0]), 0.0, 3.0, TOL10)
        zs = project(tr)(ts)
        err = float(max(np.max(np.abs(zs[:, 0] - ref(ts))), np.max(np.abs(zs[:, 1]))))
        ok &= err <= 1e-7
        details[name] = err
    C = f_from_potential(catalog_get("cubic_harmonic_2d"), seed=seed)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-2, 2, size=(100, 2))
    zerr = max(abs(C.F_complex(complex(x, y)) - complex(x, y) ** 2) for x, y in pts)
    ok &= zerr <= 1e-12
    blow = detect_blowup(C, [1.0, 0.0], [0.0, 0.0], 20.0, TOL10)
    finite = blow.t_bracket is not None and all(np.isfinite(blow.t_bracket)) and blow.t_bracket[1] < 20.0
    ok &= blow.blown_up and finite
    details.update(z_squared_err=zerr, blowup=blow.as_dict())
    return ok, details


@_timed(9, "square-root lift")
def criterion_9(seed):
    details = {}
    ok = True
    cases = (("harmonic", {}, [1.0], [0.0]), ("linear", {"b": [1.0]}, [1.0], [0.0]))
    for name, params, x0, xd0 in cases:
        V = catalog_get(name, params)
        rep = verify_sqrt_lift(V, x0, xd0, 1.0, 0.0, 5.0, 1e-6, TOL10)
        good = rep.passed and rep.c0_drift <= 1e-9
        ok &= good
        details[name] = {**rep.as_dict(), "pass": good}
    # the squared harmonic potential is the quartic catalog entry
    W = squared_potential(catalog_get("harmonic"), 1.0, 0.0)
    Q = catalog_get("quartic_of_harmonic", {"c0": 1.0, "c1": 0.0})
    xs = np.linspace(-2, 2, 41)
    qerr = float(max(abs(W.grad(0.0, np.array([x]))[0] - Q.grad(0.0, np.array([x]))[0]) for x in xs))
    ok &= qerr <= 1e-12
    details["quartic_grad_mismatch"] = qerr
    return ok, details


@_timed(10, "two-point boundary problem", budget=60.0)
def criterion_10(seed):
    from .riemlift import ShootingConfig

    details = {}
    ok = True
    cfg = ShootingConfig(seed=seed)
    for name in ("free", "harmonic", "time_harmonic"):
        V = catalog_get(name)
        integral = straight_path_integral(V, [0.0], [1.0])
        v1 = integral + 0.5
        r = shoot_two_point(V, [0.0], [1.0], v1, cfg)
        good = r.terminal_gap <= 1e-8 and r.tv_residual <= 1e-5 and r.coe_drift <= 1e-7
        if V.time_independent:
            good &= r.v2_gap is not None and r.v2_gap <= 1e-5
        good &= r.v1_margin >= 0.1 and abs(r.c0_rescaled - 1.0) <= 1e-9
        ok &= good
        details[name] = {
            "terminal_gap": r.terminal_gap, "tv_residual": r.tv_residual, "coe_drift": r.coe_drift,
            "v2_gap": r.v2_gap, "c0_raw": r.c0_raw, "newton_steps": r.newton_steps, "pass": good,
        }
    rejected = False
    try:
        shoot_two_point(catalog_get("free"), [0.0], [1.0], 0.0, cfg)
    except MarginError as exc:
        rejected = "non-degeneracy" in str(exc)
    ok &= rejected
    details["degenerate_rejected"] = rejected
    return ok, details


def _random_states(rng, D, count, box=1.0):
    return [np.concatenate([rng.uniform(-box, box, D), rng.normal(size=D)]) for _ in range(count)]


@_timed(11, "analytic vs finite-difference Christoffels")
def criterion_11(seed):
    rng = np.random.default_rng(seed)
    details = {}
    # pp-wave symbol table
    m = BrinkmannMetric(catalog_get("time_harmonic", n=2))
    err = max(float(np.max(np.abs(m.christoffel(y[:4]).dense() - christoffel_fd(m, y[:4])))) for y in _random_states(rng, 4, 50))
    details["pp_wave"] = err
    # conformal geodesic system
    cm = ConformalMetric(m, conformal_factor("linear_x:0.1"))
    fd = geodesic_field_fd(cm)
    an = cm.geodesic_field()
    details["conformal"] = max(float(np.max(np.abs(an(0, y) - fd(0, y)))) for y in _random_states(rng, 4, 50))
    # split signature
    sm = SplitMetric(catalog_get("cubic_harmonic_2d"))
    fd, an = geodesic_field_fd(sm), sm.geodesic_field()
    details["split"] = max(float(np.max(np.abs(an(0, y) - fd(0, y)))) for y in _random_states(rng, 4, 50))
    # Riemannian dual, with c0 read off each state
    rm = RiemannianDualMetric(catalog_get("time_harmonic", n=2))
    fd = geodesic_field_fd(rm)
    details["riemannian_dual"] = max(
        float(np.max(np.abs(rm.geodesic_field(rm.c0(y[:4], y[4:]))(0, y) - fd(0, y)))) for y in _random_states(rng, 4, 50)
    )
    return all(v <= 1e-6 for v in details.values()), details


CRITERIA = (
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
    criterion_7, criterion_8, criterion_9, criterion_10, criterion_11,
)


def run_all(seed: int = 0, echo=None) -> list[CriterionResult]:
    results = []
    for crit in CRITERIA:
        r = crit(seed)
        results.append(r)
        if echo is not None:
            echo(format_line(r))
    return results
