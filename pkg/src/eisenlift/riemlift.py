"""The positive-definite metric dual to a pp-wave, its square-root lift, and two-point shooting.

The metric on ``(v, t, x)`` is

    2 dv^2 - 4 V dv dt + (1 + 4 V^2)/2 dt^2 + |dx|^2,

whose geodesics conserve ``c0 = 2 vdot - 2 V tdot`` (``d/dv`` is Killing).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .lift import LiftState, Trajectory, fd_acceleration, solve_hamiltonian
from .odeint import COMPLETED, HermiteInterpolant, IntegratorConfig, OdeSystem, integrate
from .potentials import PotentialSpec, squared_potential
from .quadrature import integrate_scalar

__all__ = [
    "RiemannianDualMetric",
    "riem_metric_value",
    "riem_geodesic_rhs",
    "integrate_riem",
    "C0Warning",
    "sqrt_lift_initial",
    "SqrtLiftReport",
    "verify_sqrt_lift",
    "ShootingConfig",
    "ShootingResult",
    "MarginError",
    "ShootingError",
    "straight_path_integral",
    "shoot_two_point",
    "coe_check",
]

_TIGHT = IntegratorConfig(rtol=1e-12, atol=1e-12)


class C0Warning(UserWarning):
    """``c0 = 0``: the lift degenerates (the ``x``-motion is free)."""


class MarginError(ValueError):
    def __init__(self, message: str, margin: float, integral: float):
        super().__init__(message)
        self.margin = margin
        self.integral = integral


class ShootingError(RuntimeError):
    def __init__(self, message: str, best_residual: float):
        super().__init__(message)
        self.best_residual = best_residual


class RiemannianDualMetric:
    def __init__(self, V: PotentialSpec):
        self.V = V
        self.n = V.n
        self.dim = V.n + 2

    def describe(self) -> dict:
        return {"type": "riemannian_dual", "potential": self.V.describe()}

    def matrix(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        Vp = self.V.eval(p[1], p[2:])
        G = np.eye(self.dim)
        G[0, 0] = 2.0
        G[0, 1] = G[1, 0] = -2.0 * Vp
        G[1, 1] = 0.5 * (1.0 + 4.0 * Vp * Vp)
        return G

    def value(self, p, X, Y) -> float:
        p = np.asarray(p, dtype=float)
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        Vp = self.V.eval(p[1], p[2:])
        return float(
            2 * X[0] * Y[0]
            - 2 * Vp * (X[0] * Y[1] + X[1] * Y[0])
            + 0.5 * (1 + 4 * Vp * Vp) * X[1] * Y[1]
            + X[2:] @ Y[2:]
        )

    def norms(self, states) -> np.ndarray:
        D = self.dim
        return np.array([self.value(r[:D], r[D:], r[D:]) for r in np.atleast_2d(states)])

    def c0(self, q, qdot) -> float:
        return float(2 * qdot[0] - 2 * self.V.eval(q[1], q[2:]) * qdot[1])

    def c0_values(self, states) -> np.ndarray:
        D = self.dim
        return np.array([self.c0(r[:D], r[D:]) for r in np.atleast_2d(states)])

    def geodesic_field(self, c0: float, track_integral: bool = False):
        """First-order field for fixed ``c0``; optionally appends ``int grad V . xdot ds`` as a last state."""
        V, D = self.V, self.dim

        def rhs(s, y):
            t, x = y[1], y[2:D]
            vd, td, xd = y[D], y[D + 1], y[D + 2:2 * D]
            Vp = V.eval(t, x)
            g = np.asarray(V.grad(t, x), dtype=float)
            Vt = V.dt(t, x)
            gx = g @ xd
            tdd = 2 * c0 * gx  # 2 c0 (dV/ds - V_t tdot)
            acc = np.empty(D)
            acc[0] = (Vt * td + gx) * td + Vp * tdd
            acc[1] = tdd
            acc[2:] = -c0 * g * td
            parts = [y[D:2 * D], acc]
            if track_integral:
                parts.append([gx])
            return np.concatenate(parts)

        return rhs


def riem_metric_value(m: RiemannianDualMetric, p, X, Y) -> float:
    return m.value(p, X, Y)


def _check_c0(m: RiemannianDualMetric, st: LiftState, c0: float) -> None:
    actual = m.c0(st.q, st.qdot)
    if abs(actual - c0) > 1e-12 * max(1.0, abs(c0)):
        raise ValueError(f"c0={c0} is inconsistent with the state (2 vdot - 2 V tdot = {actual})")


def riem_geodesic_rhs(m: RiemannianDualMetric, st: LiftState, c0: float | None = None) -> LiftState:
    """Geodesic field at ``st``; ``c0`` defaults to (and must equal) ``2 vdot - 2 V tdot``."""
    if c0 is None:
        c0 = m.c0(st.q, st.qdot)
    _check_c0(m, st, c0)
    d = m.geodesic_field(c0)(0.0, np.concatenate([st.q, st.qdot]))
    return LiftState(d[: m.dim], d[m.dim:])


def integrate_riem(
    m: RiemannianDualMetric, st0: LiftState, s0: float, s1: float, cfg: IntegratorConfig | None = None,
    c0: float | None = None,
) -> Trajectory:
    c0 = m.c0(st0.q, st0.qdot) if c0 is None else float(c0)
    _check_c0(m, st0, c0)
    y0 = np.concatenate([st0.q, st0.qdot])
    out = integrate(OdeSystem(y0.shape[0], m.geodesic_field(c0)), y0, s0, s1, cfg)
    return Trajectory.from_output(out, kind="lift", metric=m, c0=c0)


def sqrt_lift_initial(V: PotentialSpec, x0, xdot0, c0: float, c1: float) -> LiftState:
    """Initial data lifting ``x'' = -grad (c0 V + c1)^2``: ``tdot = 2 c0 V + 2 c1``, ``vdot = V tdot + c0/2``."""
    if not V.time_independent:
        raise ValueError("the square-root lift needs a time-independent potential")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    xdot0 = np.asarray(xdot0, dtype=float).reshape(-1)
    if x0.shape != (V.n,) or xdot0.shape != (V.n,):
        raise ValueError(f"initial data must have dimension {V.n}")
    if c0 == 0:
        warnings.warn("c0 = 0: the lifted x-motion is free", C0Warning, stacklevel=2)
    V0 = V.eval(0.0, x0)
    td = 2 * c0 * V0 + 2 * c1
    vd = V0 * td + 0.5 * c0
    return LiftState(np.concatenate([[0.0, 0.0], x0]), np.concatenate([[vd, td], xdot0]))


@dataclass(frozen=True)
class SqrtLiftReport:
    max_gap: float
    c0_drift: float
    norm_drift: float
    sqrt_drift: float
    coe_drift: float
    tol: float
    passed: bool
    geodesic: Trajectory = field(repr=False, compare=False, default=None)
    direct: Trajectory = field(repr=False, compare=False, default=None)

    def as_dict(self) -> dict:
        return {
            "max_gap": self.max_gap,
            "c0_drift": self.c0_drift,
            "norm_drift": self.norm_drift,
            "sqrt_drift": self.sqrt_drift,
            "coe_drift": self.coe_drift,
            "pass": self.passed,
        }


def _x_gap(a: Trajectory, b: Trajectory, ia: slice, ib: slice) -> float:
    lo = max(min(a.domain), min(b.domain))
    hi = min(max(a.domain), max(b.domain))
    gap = 0.0
    for src, other, i_src, i_oth in ((a, b, ia, ib), (b, a, ib, ia)):
        nodes = src.grid[(src.grid >= lo) & (src.grid <= hi)]
        if len(nodes):
            gap = max(gap, float(np.max(np.abs(src.interp(nodes)[:, i_src] - other.interp(nodes)[:, i_oth]))))
    return gap


def _coe(states: np.ndarray, D: int) -> np.ndarray:
    xd = states[:, D + 2:2 * D]
    return 0.5 * np.sum(xd * xd, axis=1) + 0.25 * states[:, D + 1] ** 2


def verify_sqrt_lift(
    V: PotentialSpec, x0, xdot0, c0: float, c1: float, horizon: float = 5.0, tol: float = 1e-6,
    cfg: IntegratorConfig | None = None,
) -> SqrtLiftReport:
    """Geodesic of the dual metric against a direct integration of ``x'' = -grad (c0 V + c1)^2``."""
    cfg = cfg or IntegratorConfig(rtol=1e-10, atol=1e-10)
    m = RiemannianDualMetric(V)
    st0 = sqrt_lift_initial(V, x0, xdot0, c0, c1)
    geo = integrate_riem(m, st0, 0.0, horizon, cfg, c0)
    W = squared_potential(V, c0, c1)
    direct = solve_hamiltonian(W, 0.0, x0, xdot0, horizon, cfg)
    D, n = m.dim, V.n
    gap = _x_gap(geo, direct, slice(2, D), slice(0, n))
    c0s = m.c0_values(geo.states)
    norms = m.norms(geo.states)
    sq = 0.25 * geo.states[:, D + 1] ** 2 - np.array(
        [(c0 * V.eval(0.0, x) + c1) ** 2 for x in geo.states[:, 2:D]]
    )
    coe = _coe(geo.states, D)
    return SqrtLiftReport(
        max_gap=gap,
        c0_drift=float(np.max(np.abs(c0s - c0))),
        norm_drift=float(np.max(np.abs(norms - norms[0]))),
        sqrt_drift=float(np.max(np.abs(sq - sq[0]))),
        coe_drift=float(np.max(np.abs(coe - coe[0]))),
        tol=tol,
        passed=bool(gap <= tol),
        geodesic=geo,
        direct=direct,
    )


@dataclass(frozen=True)
class ShootingConfig:
    bvp_tol: float = 1e-8
    margin_min: float = 1e-6
    max_newton: int = 40
    n_perturb: int = 8
    perturb_scale: float | None = None  # default 0.5 (1 + |x1 - x0|)
    fd_step: float = 1e-6
    seed: int = 0
    collect_alternates: bool = False
    integrator: IntegratorConfig = field(default_factory=lambda: _TIGHT)
    recheck: IntegratorConfig = field(default_factory=lambda: IntegratorConfig(rtol=1e-10, atol=1e-10))


@dataclass
class ShootingResult:
    initial_velocity: np.ndarray
    terminal_gap: float
    c0_raw: float
    rescaled: bool
    c0_rescaled: float
    c: float
    v1_margin: float
    tau_grid: np.ndarray  # rescaled parameter t
    tau: np.ndarray  # tau(t) = t-coordinate of the rescaled geodesic
    taudot: np.ndarray
    x_curve: Trajectory
    rescaled_gap: float
    tv_residual: float
    coe_drift: float
    newton_steps: int
    start_index: int
    v2_gap: float | None = None
    alternates: list = field(default_factory=list)
    geodesic: Trajectory = field(default=None, repr=False)

    def as_dict(self, samples: bool = True) -> dict:
        d = {
            "initial_velocity": self.initial_velocity.tolist(),
            "terminal_gap": self.terminal_gap,
            "c0_raw": self.c0_raw,
            "rescaled": self.rescaled,
            "c0_rescaled": self.c0_rescaled,
            "c": self.c,
            "v1_margin": self.v1_margin,
            "rescaled_gap": self.rescaled_gap,
            "tv_residual": self.tv_residual,
            "coe_drift": self.coe_drift,
            "v2_gap": self.v2_gap,
            "newton_steps": self.newton_steps,
            "start_index": self.start_index,
            "alternates": [np.asarray(a).tolist() for a in self.alternates],
        }
        if samples:
            n = self.x_curve.m
            d["tau_samples"] = [[float(t), float(v)] for t, v in zip(self.tau_grid, self.tau)]
            d["x_samples"] = [[float(t), *map(float, row[:n])] for t, row in zip(self.x_curve.grid, self.x_curve.states)]
        return d


def straight_path_integral(V: PotentialSpec, x0, x1, tol: float = 1e-10) -> float:
    """``int_0^1 V(u, x0 + u (x1 - x0)) du``, the value of ``v1`` for which ``c0`` would vanish."""
    x0 = np.asarray(x0, dtype=float)
    dx = np.asarray(x1, dtype=float) - x0
    return integrate_scalar(lambda u: float(V.eval(u, x0 + u * dx)), 0.0, 1.0, tol)


def _endpoint(m: RiemannianDualMetric, q0, w, cfg) -> np.ndarray | None:
    c0 = m.c0(q0, w)
    y0 = np.concatenate([q0, w])
    try:
        out = integrate(OdeSystem(y0.shape[0], m.geodesic_field(c0)), y0, 0.0, 1.0, cfg)
    except Exception:
        return None
    if out.status != COMPLETED:
        return None
    return out.states[-1][: m.dim]


def _newton(m, q0, target, w, cfg: ShootingConfig):
    D = m.dim

    def resid(w):
        end = _endpoint(m, q0, w, cfg.integrator)
        return None if end is None else end - target

    F = resid(w)
    if F is None:
        return None, np.inf, 0
    norm = float(np.linalg.norm(F))
    for step in range(cfg.max_newton):
        if norm <= cfg.bvp_tol:
            return w, norm, step
        J = np.empty((D, D))
        for j in range(D):
            h = cfg.fd_step * (1.0 + abs(w[j]))
            e = np.zeros(D)
            e[j] = h
            Fp, Fm = resid(w + e), resid(w - e)
            if Fp is None or Fm is None:
                return None, norm, step
            J[:, j] = (Fp - Fm) / (2 * h)
        delta = np.linalg.lstsq(J, -F, rcond=None)[0]
        lam = 1.0
        while lam >= 1.0 / 1024:
            w_try = w + lam * delta
            F_try = resid(w_try)
            if F_try is not None:
                n_try = float(np.linalg.norm(F_try))
                if n_try < (1 - 1e-4 * lam) * norm:
                    w, F, norm = w_try, F_try, n_try
                    break
            lam *= 0.5
        else:
            return None, norm, step
    return (w, norm, cfg.max_newton) if norm <= cfg.bvp_tol else (None, norm, cfg.max_newton)


def shoot_two_point(V: PotentialSpec, x0, x1, v1: float, cfg: ShootingConfig | None = None) -> ShootingResult:
    """Geodesic of the dual metric from ``(0, 0, x0)`` to ``(v1, 1, x1)``, rescaled to ``c0 = 1``."""
    cfg = cfg or ShootingConfig()
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    x1 = np.asarray(x1, dtype=float).reshape(-1)
    if x0.shape != (V.n,) or x1.shape != (V.n,):
        raise ValueError(f"endpoints must have dimension {V.n}")
    integral = straight_path_integral(V, x0, x1)
    margin = abs(v1 - integral)
    if margin < cfg.margin_min:
        raise MarginError(
            f"non-degeneracy condition violated: v1={v1} must differ from the straight-path integral "
            f"of V ({integral:.12g}); margin {margin:.3g} < {cfg.margin_min:.3g}",
            margin, integral,
        )
    m = RiemannianDualMetric(V)
    D = m.dim
    q0 = np.concatenate([[0.0, 0.0], x0])
    target = np.concatenate([[v1, 1.0], x1])
    base_w = np.concatenate([[v1, 1.0], x1 - x0])
    scale = cfg.perturb_scale if cfg.perturb_scale is not None else 0.5 * (1.0 + float(np.linalg.norm(x1 - x0)))
    rng = np.random.default_rng(cfg.seed)
    starts = [base_w] + [base_w + scale * rng.standard_normal(D) for _ in range(cfg.n_perturb)]

    found = None
    alternates = []
    best = np.inf
    for idx, w0 in enumerate(starts):
        w, res, steps = _newton(m, q0, target, w0.copy(), cfg)
        best = min(best, res)
        if w is None:
            continue
        if found is None:
            found = (w, res, steps, idx)
            if not cfg.collect_alternates:
                break
        elif all(np.max(np.abs(w - a)) > 1e-6 for a in [found[0], *alternates]):
            alternates.append(w)
    if found is None:
        raise ShootingError(f"shooting did not converge from any of {len(starts)} starts (best residual {best:.3g})", best)
    w, res, steps, idx = found
    c0_raw = m.c0(q0, w)
    if abs(c0_raw) < 1e-12:
        raise ShootingError("converged geodesic has c0 = 0, contradicting the non-degeneracy margin", res)
    return _rescale(V, m, q0, target, w, res, steps, idx, c0_raw, margin, alternates, cfg)


def _rescale(V, m, q0, target, w, res, steps, idx, c0_raw, margin, alternates, cfg) -> ShootingResult:
    D, n = m.dim, V.n
    w_t = w / c0_raw
    c0_t = m.c0(q0, w_t)
    y0 = np.concatenate([q0, w_t, [0.0]])
    out = integrate(OdeSystem(y0.shape[0], m.geodesic_field(c0_t, track_integral=True)), y0, 0.0, c0_raw, cfg.recheck)
    if out.status != COMPLETED:
        raise ShootingError(f"re-integration of the rescaled geodesic ended with status {out.status}", res)
    states = out.states
    geo_states = states[:, : 2 * D]
    geo_f = out.interp.f[:, : 2 * D]
    bub = None if out.interp.bubble is None else out.interp.bubble[:, : 2 * D]
    geo = Trajectory(out.grid, geo_states, HermiteInterpolant(out.grid, geo_states, geo_f, bub),
                     out.status, {"kind": "lift", "metric": m, "c0": c0_t})
    rescaled_gap = float(np.linalg.norm(geo_states[-1, :D] - target))

    # base curve t -> (x, xdot); t is the rescaled affine parameter
    x_states = np.hstack([geo_states[:, 2:D], geo_states[:, D + 2:]])
    x_f = np.hstack([geo_f[:, 2:D], geo_f[:, D + 2:]])
    x_bub = None if bub is None else np.hstack([bub[:, 2:D], bub[:, D + 2:]])
    x_curve = Trajectory(out.grid, x_states, HermiteInterpolant(out.grid, x_states, x_f, x_bub), out.status,
                         {"kind": "base", "potential": V})
    tau = geo_states[:, 1]
    taudot = geo_states[:, D + 1]
    c = float(w_t[1] / 2)
    integral = states[:, -1]

    xdd = fd_acceleration(x_curve, out.grid, 1e-4)
    force = np.array([
        -2 * (c + I) * np.asarray(V.grad(tt, x), dtype=float)
        for tt, x, I in zip(tau, x_states[:, :n], integral)
    ])
    tv_residual = float(np.max(np.abs(xdd - force)))
    coe = _coe(geo_states, D)
    coe_drift = float(np.max(np.abs(coe - coe[0])))

    v2_gap = None
    if V.time_independent:
        cbar = c - V.eval(0.0, q0[2:])
        W = squared_potential(V, 1.0, cbar)
        direct = solve_hamiltonian(W, 0.0, q0[2:], w_t[2:], c0_raw, cfg.recheck)
        ia = slice(0, n)
        v2_gap = _x_gap(x_curve, direct, ia, ia)

    return ShootingResult(
        initial_velocity=w, terminal_gap=float(res), c0_raw=float(c0_raw), rescaled=True,
        c0_rescaled=float(c0_t), c=c, v1_margin=float(margin), tau_grid=out.grid.copy(), tau=tau.copy(),
        taudot=taudot.copy(), x_curve=x_curve, rescaled_gap=rescaled_gap, tv_residual=tv_residual,
        coe_drift=coe_drift, newton_steps=int(steps), start_index=int(idx), v2_gap=v2_gap,
        alternates=alternates, geodesic=geo,
    )


def coe_check(obj) -> dict:
    """Drift of ``|xdot|^2/2 + taudot^2/4`` along a shooting solution or a dual-metric geodesic."""
    if isinstance(obj, ShootingResult):
        xd = obj.x_curve.velocities
        q = 0.5 * np.sum(xd * xd, axis=1) + 0.25 * obj.taudot**2
    else:
        q = _coe(obj.states, obj.m)
    return {"drift": float(np.max(np.abs(q - q[0])))}
