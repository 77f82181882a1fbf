"""Conformal rescalings ``e^{2f} g`` of lifted metrics and their lightlike geodesics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import christoffel_fd
from .lift import (
    BrinkmannMetric,
    LiftState,
    Trajectory,
    causal_class,
    eisenhart_lift_initial,
    integrate_lift,
)
from .odeint import HermiteInterpolant, IntegratorConfig, OdeSystem, integrate
from .quadrature import cumulative_integral, integrate_scalar

__all__ = [
    "ConformalFactor",
    "conformal_factor",
    "check_factor_derivatives",
    "ReparamMap",
    "ConformalMetric",
    "NotLightlikeError",
    "reparametrize",
    "conformal_geodesic_rhs",
    "ConformalReport",
    "verify_conformal_class",
    "pregeodesic_residual",
    "FACTOR_KINDS",
]

FACTOR_KINDS = ("zero", "constant", "linear_x", "gaussian")


class NotLightlikeError(ValueError):
    pass


@dataclass(frozen=True)
class ConformalFactor:
    """A function ``f(t, x)`` (independent of ``v``) with its first derivatives."""

    f: Callable
    f_t: Callable
    f_grad: Callable
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def describe(self) -> dict:
        return {"kind": self.name, **self.params}

    def at(self, q) -> float:
        q = np.asarray(q, dtype=float)
        return float(self.f(q[1], q[2:]))

    def rate(self, q, qdot) -> float:
        """``d(f o gamma)/ds`` for a curve through ``q`` with velocity ``qdot``."""
        t, x = q[1], q[2:]
        return float(self.f_t(t, x) * qdot[1] + np.dot(self.f_grad(t, x), qdot[2:]))


def _parse_numbers(text: str, count: int, kind: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",")]
    except ValueError:
        raise ValueError(f"conformal factor {kind!r} needs numeric parameters, got {text!r}") from None
    if len(values) != count:
        raise ValueError(f"conformal factor {kind!r} takes {count} parameter(s), got {len(values)}")
    return values


def conformal_factor(spec) -> ConformalFactor:
    """Build a factor from ``"zero"``, ``"constant:c"``, ``"linear_x:c"`` or ``"gaussian:c,sigma"``.

    A ``ConformalFactor`` is passed through unchanged.
    """
    if isinstance(spec, ConformalFactor):
        return spec
    kind, _, rest = str(spec).partition(":")
    kind = kind.strip()
    zero_t = lambda t, x: 0.0
    if kind == "zero":
        if rest:
            raise ValueError("conformal factor 'zero' takes no parameters")
        return ConformalFactor(lambda t, x: 0.0, zero_t, lambda t, x: np.zeros(np.shape(x)), "zero", {})
    if kind == "constant":
        (c,) = _parse_numbers(rest, 1, kind)
        return ConformalFactor(lambda t, x: c, zero_t, lambda t, x: np.zeros(np.shape(x)), kind, {"c": c})
    if kind == "linear_x":
        (c,) = _parse_numbers(rest, 1, kind)

        def grad(t, x):
            g = np.zeros(np.shape(x))
            g[0] = c
            return g

        return ConformalFactor(lambda t, x: c * x[0], zero_t, grad, kind, {"c": c})
    if kind == "gaussian":
        c, sigma = _parse_numbers(rest, 2, kind)
        if sigma <= 0:
            raise ValueError("gaussian conformal factor needs sigma > 0")

        def f(t, x):
            return c * np.exp(-np.dot(x, x) / (2 * sigma**2))

        return ConformalFactor(f, zero_t, lambda t, x: -f(t, x) * np.asarray(x) / sigma**2, kind, {"c": c, "sigma": sigma})
    raise ValueError(f"unknown conformal factor {kind!r}; expected one of {list(FACTOR_KINDS)}")


def check_factor_derivatives(fac: ConformalFactor, samples, h: float = 1e-5) -> float:
    """Largest deviation of ``f_t``/``f_grad`` from central differences of ``f``."""
    worst = 0.0
    for t, x in samples:
        x = np.asarray(x, dtype=float)
        g = np.asarray(fac.f_grad(t, x), dtype=float)
        for i in range(x.shape[0]):
            e = np.zeros_like(x)
            e[i] = h
            worst = max(worst, abs(g[i] - (fac.f(t, x + e) - fac.f(t, x - e)) / (2 * h)))
        worst = max(worst, abs(fac.f_t(t, x) - (fac.f(t + h, x) - fac.f(t - h, x)) / (2 * h)))
    return float(worst)


class ConformalMetric:
    """``e^{2f} g`` for a lifted metric ``g`` exposing ``matrix`` and ``value``."""

    def __init__(self, base, f: ConformalFactor):
        self.base = base
        self.f = f
        self.dim = base.dim
        self.n = base.n

    def describe(self) -> dict:
        return {"type": "conformal", "base": self.base.describe(), "factor": self.f.describe()}

    def weight(self, p) -> float:
        return float(np.exp(2.0 * self.f.at(p)))

    def matrix(self, p) -> np.ndarray:
        return self.weight(p) * self.base.matrix(p)

    def value(self, p, X, Y) -> float:
        return self.weight(p) * self.base.value(p, X, Y)

    def norms(self, states) -> np.ndarray:
        D = self.dim
        return np.array([self.value(r[:D], r[D:], r[D:]) for r in np.atleast_2d(states)])

    def geodesic_field(self):
        if not isinstance(self.base, BrinkmannMetric) or not self.base.isotropic:
            raise ValueError("the conformal geodesic system is implemented for the isotropic pp-wave only")
        m, fac, D = self.base, self.f, self.dim

        def rhs(s, y):
            return np.concatenate([y[D:], _conformal_acc(m, fac, y[:D], y[D:])])

        return rhs


def _conformal_acc(m: BrinkmannMetric, fac: ConformalFactor, q, u) -> np.ndarray:
    t, x = q[1], q[2:]
    vd, td, xd = u[0], u[1], u[2:]
    V = m.V.eval(t, x)
    gV = np.asarray(m.V.grad(t, x), dtype=float)
    Vt = m.V.dt(t, x)
    ft = fac.f_t(t, x)
    gf = np.asarray(fac.f_grad(t, x), dtype=float)
    dVds = Vt * td + gV @ xd
    p = gf @ xd
    dfds = ft * td + p
    S = xd @ xd
    acc = np.empty(m.dim)
    acc[0] = (2 * dVds - Vt * td) * td - 2 * V * ft * td * td - np.sum((2 * gf * vd - ft * xd) * xd)
    acc[1] = -2 * dfds * td
    acc[2:] = (
        -gV * td * td
        + 2 * (vd - V * td) * gf * td
        - (2 * xd * xd - S) * gf
        - 2 * xd * (p - gf * xd)
        - 2 * ft * td * xd
    )
    return acc


def conformal_geodesic_rhs(m: BrinkmannMetric, f: ConformalFactor, st: LiftState) -> LiftState:
    if not m.isotropic:
        raise ValueError("the conformal geodesic system is implemented for the isotropic pp-wave only")
    return LiftState(st.qdot.copy(), _conformal_acc(m, conformal_factor(f), st.q, st.qdot))


class ReparamMap:
    """Monotone map ``t -> s = tau(t)`` with ``tau(t0) = 0`` and its inverse."""

    def __init__(self, grid, tau, rate, t0: float):
        self.grid = np.asarray(grid, dtype=float)
        self.tau = np.asarray(tau, dtype=float)
        self.rate = np.asarray(rate, dtype=float)
        self.t0 = float(t0)
        self._fwd = HermiteInterpolant(self.grid, self.tau[:, None], self.rate[:, None])
        self._inv = HermiteInterpolant(self.tau, self.grid[:, None], (1.0 / self.rate)[:, None])

    @property
    def s_grid(self) -> np.ndarray:
        return self.tau

    def __call__(self, t):
        out = self._fwd(t)
        return out[..., 0]

    def inverse(self, s):
        """``tau^{-1}(s)``, polished by Newton steps against the forward map."""
        s = np.asarray(s, dtype=float)
        t = self._inv(s)[..., 0]
        lo, hi = self._fwd.domain
        for _ in range(4):
            t = np.clip(t - (self._fwd(t)[..., 0] - s) / self._fwd.derivative(t)[..., 0], lo, hi)
        return t

    def is_increasing(self) -> bool:
        order = np.sign(np.diff(self.grid))
        return bool(np.all(np.sign(np.diff(self.tau)) == order) and np.all(self.rate > 0))


def _require_lightlike(tr: Trajectory, tol: float = 1e-6) -> None:
    metric = tr.meta.get("metric")
    if metric is None:
        raise ValueError("trajectory carries no metric; expected a lifted geodesic")
    norms = metric.norms(tr.states)
    worst = float(np.max(np.abs(norms)))
    if worst > tol:
        raise NotLightlikeError(f"conformal reparametrization needs a lightlike geodesic (max |g(u,u)| = {worst:.3g})")


def reparametrize(tr: Trajectory, f, t0: float | None = None, tol: float = 1e-10) -> tuple[ReparamMap, Trajectory]:
    """Reparametrize a lightlike lift so it becomes a geodesic of ``e^{2f} g``."""
    fac = conformal_factor(f)
    _require_lightlike(tr)
    D = tr.m
    lo, hi = tr.domain
    t0 = tr.grid[0] if t0 is None else float(t0)
    if not (lo - 1e-12 <= t0 <= hi + 1e-12):
        raise ValueError(f"t0={t0} outside the trajectory range [{lo}, {hi}]")

    def weight(r):
        return np.exp(2.0 * fac.at(tr.interp(r)[:D]))

    tau = cumulative_integral(weight, tr.grid, tol)
    tau = tau - integrate_scalar(weight, tr.grid[0], t0, tol)
    q = tr.positions
    u = tr.velocities
    acc = tr.accelerations
    fvals = np.array([fac.at(row) for row in q])
    rates = np.array([fac.rate(qq, uu) for qq, uu in zip(q, u)])
    w = np.exp(-2.0 * fvals)[:, None]
    new_vel = w * u
    new_acc = w * w * (acc - 2.0 * rates[:, None] * u)
    rmap = ReparamMap(tr.grid, tau, np.exp(2.0 * fvals), t0)
    states = np.hstack([q, new_vel])
    interp = HermiteInterpolant(tau, states, np.hstack([new_vel, new_acc]))
    meta = dict(tr.meta)
    meta.update(kind="lift", metric=ConformalMetric(tr.meta["metric"], fac), reparam=rmap)
    return rmap, Trajectory(grid=tau, states=states, interp=interp, status=tr.status, meta=meta)


def pregeodesic_residual(tr: Trajectory, f, samples: int = 40, h: float = 1e-5) -> float:
    """Deviation of the ``e^{2f} g`` covariant acceleration of a lightlike lift from ``2 (df/dt) u``.

    Uses finite-difference Christoffels of the conformal metric, so it is an
    independent (if noisier) check of the reparametrization argument.
    """
    fac = conformal_factor(f)
    cm = ConformalMetric(tr.meta["metric"], fac)
    idx = np.unique(np.linspace(0, len(tr.grid) - 1, min(samples, len(tr.grid))).astype(int))
    worst = 0.0
    for k in idx:
        q, u, a = tr.positions[k], tr.velocities[k], tr.accelerations[k]
        cov = a + np.einsum("abc,b,c->a", christoffel_fd(cm, q, h), u, u)
        worst = max(worst, float(np.max(np.abs(cov - 2.0 * fac.rate(q, u) * u))))
    return worst


@dataclass(frozen=True)
class ConformalReport:
    max_curve_gap: float
    max_conformal_norm: float
    max_independent_norm: float
    pregeodesic_residual: float
    tau_end: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "max_curve_gap": self.max_curve_gap,
            "max_conformal_norm": self.max_conformal_norm,
            "max_independent_norm": self.max_independent_norm,
            "pregeodesic_residual": self.pregeodesic_residual,
            "tau_end": self.tau_end,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class ConformalRun:
    report: ConformalReport
    lift: Trajectory
    reparametrized: Trajectory
    independent: Trajectory
    reparam: ReparamMap


def _node_gap(a: Trajectory, b: Trajectory) -> float:
    lo = max(min(a.domain), min(b.domain))
    hi = min(max(a.domain), max(b.domain))
    gap = 0.0
    for src, other in ((a, b), (b, a)):
        nodes = src.grid[(src.grid >= lo) & (src.grid <= hi)]
        if len(nodes):
            gap = max(gap, float(np.max(np.abs(src.interp(nodes) - other.interp(nodes)))))
    return gap


def run_conformal_check(
    m: BrinkmannMetric, f, base_solution: Trajectory, cfg: IntegratorConfig | None = None, tol: float = 1e-6,
) -> ConformalRun:
    fac = conformal_factor(f)
    t0 = float(base_solution.grid[0])
    t1 = float(base_solution.grid[-1])
    x0 = base_solution.positions[0]
    xd0 = base_solution.velocities[0]
    st0 = eisenhart_lift_initial(m.V, t0, x0, xd0, causal_class("lightlike"), a=m.a)
    lift = integrate_lift(m, st0, t0, t1, cfg)
    rmap, rep = reparametrize(lift, fac, t0)
    cm = ConformalMetric(m, fac)
    y0 = rep.states[0]
    out = integrate(OdeSystem(y0.shape[0], cm.geodesic_field()), y0, float(rep.grid[0]), float(rep.grid[-1]), cfg)
    indep = Trajectory.from_output(out, kind="lift", metric=cm)
    gap = _node_gap(rep, indep)
    cnorm = float(np.max(np.abs(cm.norms(rep.states))))
    inorm = float(np.max(np.abs(cm.norms(indep.states))))
    resid = pregeodesic_residual(lift, fac)
    report = ConformalReport(gap, cnorm, inorm, resid, float(rep.grid[-1]), bool(gap <= tol and cnorm <= tol))
    return ConformalRun(report, lift, rep, indep, rmap)


def verify_conformal_class(
    m: BrinkmannMetric, f, base_solution: Trajectory, cfg: IntegratorConfig | None = None, tol: float = 1e-6,
) -> ConformalReport:
    """Lift, reparametrize, and compare against an independent integration of the conformal system."""
    return run_conformal_check(m, f, base_solution, cfg, tol).report
