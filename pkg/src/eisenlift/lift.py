"""pp-wave (Brinkmann) lifts of Hamiltonian systems.

Coordinates are always ordered ``(v, t, x1..xn)``; lifted ODE states are
flat vectors ``(q, qdot)`` of length ``2(n+2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .odeint import HermiteInterpolant, IntegratorConfig, OdeSystem, SolveOutput, integrate
from .potentials import PotentialSpec

__all__ = [
    "CausalClass",
    "LIGHTLIKE",
    "UNIT_TIMELIKE",
    "UNIT_SPACELIKE",
    "causal_class",
    "BrinkmannMetric",
    "ChristoffelTable",
    "LiftState",
    "Trajectory",
    "LiftReport",
    "DegenerateLiftError",
    "metric_value",
    "christoffel",
    "geodesic_rhs",
    "eisenhart_lift_initial",
    "integrate_lift",
    "solve_hamiltonian",
    "project",
    "verify_lift",
    "fd_acceleration",
]


class DegenerateLiftError(ValueError):
    """The lift has vanishing t-velocity (straight line case) and cannot be projected."""


@dataclass(frozen=True)
class CausalClass:
    kind: str
    epsilon: float
    norm_target: float


LIGHTLIKE = CausalClass("lightlike", 0.0, 0.0)
UNIT_TIMELIKE = CausalClass("unit_timelike", -0.5, -1.0)
UNIT_SPACELIKE = CausalClass("unit_spacelike", 0.5, 1.0)
_CLASSES = {c.kind: c for c in (LIGHTLIKE, UNIT_TIMELIKE, UNIT_SPACELIKE)}


def causal_class(kind) -> CausalClass:
    if isinstance(kind, CausalClass):
        return kind
    try:
        return _CLASSES[kind]
    except KeyError:
        raise ValueError(f"unknown causal class {kind!r}; expected one of {sorted(_CLASSES)}") from None


@dataclass(frozen=True)
class LiftState:
    q: np.ndarray
    qdot: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.qdot])

    @classmethod
    def from_vector(cls, y) -> "LiftState":
        y = np.asarray(y, dtype=float)
        D = y.shape[0] // 2
        return cls(y[:D].copy(), y[D:].copy())


@dataclass(frozen=True)
class ChristoffelTable:
    """Nonzero Christoffel symbols of a Brinkmann metric at one point.

    ``v_it[i]`` is the symbol with upper ``v`` and lower ``(x_i, t)``,
    ``v_tt`` has lower ``(t, t)``, and ``i_tt[i]`` has upper ``x_i`` and lower
    ``(t, t)``.
    """

    v_it: np.ndarray
    v_tt: float
    i_tt: np.ndarray

    def dense(self) -> np.ndarray:
        n = self.i_tt.shape[0]
        G = np.zeros((n + 2, n + 2, n + 2))
        G[0, 1, 1] = self.v_tt
        G[0, 2:, 1] = self.v_it
        G[0, 1, 2:] = self.v_it
        G[2:, 1, 1] = self.i_tt
        return G


class BrinkmannMetric:
    """``2 dv dt - 2 V(t, x) dt^2 + sum_i a_i (dx^i)^2``."""

    def __init__(self, V: PotentialSpec, a=None):
        self.V = V
        self.n = V.n
        self.a = np.ones(V.n) if a is None else np.asarray(a, dtype=float).reshape(-1)
        if self.a.shape != (V.n,):
            raise ValueError(f"anisotropy needs {V.n} coefficients, got {self.a.size}")
        if np.any(self.a == 0):
            raise ValueError("anisotropy coefficients must be nonzero")

    @property
    def dim(self) -> int:
        return self.n + 2

    @property
    def isotropic(self) -> bool:
        return bool(np.all(self.a == 1.0))

    @property
    def lorentzian(self) -> bool:
        return bool(np.all(self.a > 0))

    def describe(self) -> dict:
        return {"type": "brinkmann", "potential": self.V.describe(), "a": self.a.tolist()}

    def matrix(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        G = np.zeros((self.dim, self.dim))
        G[0, 1] = G[1, 0] = 1.0
        G[1, 1] = -2.0 * self.V.eval(p[1], p[2:])
        G[2:, 2:] = np.diag(self.a)
        return G

    def value(self, p, X, Y) -> float:
        p = np.asarray(p, dtype=float)
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        Vp = self.V.eval(p[1], p[2:])
        return float(
            X[0] * Y[1] + X[1] * Y[0] - 2.0 * Vp * X[1] * Y[1] + np.sum(self.a * X[2:] * Y[2:])
        )

    def norms(self, states: np.ndarray) -> np.ndarray:
        """``g(qdot, qdot)`` for each row ``(q, qdot)`` of ``states``."""
        D = self.dim
        return np.array([self.value(row[:D], row[D:], row[D:]) for row in np.atleast_2d(states)])

    def christoffel(self, p) -> ChristoffelTable:
        p = np.asarray(p, dtype=float)
        t, x = p[1], p[2:]
        g = np.asarray(self.V.grad(t, x), dtype=float)
        Vt = float(self.V.dt(t, x))
        # lowered symbols: [t; t t] = -V_t, [t; i t] = -V_i, [i; t t] = V_i;
        # raising with g^{vt} = 1, g^{ii} = 1/a_i.
        return ChristoffelTable(v_it=-g, v_tt=-Vt, i_tt=g / self.a)

    def geodesic_field(self):
        V, a, D = self.V, self.a, self.dim

        def rhs(s, y):
            t = y[1]
            x = y[2:D]
            td = y[D + 1]
            xd = y[D + 2:]
            gx = V.grad(t, x)
            Vt = V.dt(t, x)
            acc = np.empty(D)
            # v'' = (2 dV/ds - V_t t') t' with dV/ds = V_t t' + grad V . x'
            acc[0] = Vt * td * td + 2.0 * td * float(gx @ xd)
            acc[1] = 0.0
            acc[2:] = -(gx / a) * td * td
            return np.concatenate([y[D:], acc])

        return rhs


def metric_value(m, p, X, Y) -> float:
    return m.value(p, X, Y)


def christoffel(m: BrinkmannMetric, p) -> ChristoffelTable:
    return m.christoffel(p)


def geodesic_rhs(m, st: LiftState) -> LiftState:
    """Derivative of ``st`` along the geodesic flow: ``(qdot, qddot)``."""
    out = m.geodesic_field()(0.0, st.as_vector())
    return LiftState.from_vector(out)


def eisenhart_lift_initial(
    V: PotentialSpec, t0: float, x0, xdot0, c="lightlike", *, a=None, v0: float = 0.0,
) -> LiftState:
    """Initial data of the geodesic lift of the trajectory through ``(x0, xdot0)`` at ``t0``.

    ``v0`` is immaterial to every reported quantity and defaults to 0.
    """
    c = causal_class(c)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    xdot0 = np.asarray(xdot0, dtype=float).reshape(-1)
    if x0.shape != (V.n,) or xdot0.shape != (V.n,):
        raise ValueError(f"initial data must have dimension {V.n}")
    a = np.ones(V.n) if a is None else np.asarray(a, dtype=float)
    vdot0 = -0.5 * float(np.sum(a * xdot0**2)) + V.eval(t0, x0) + c.epsilon
    q = np.concatenate([[v0, t0], x0])
    qdot = np.concatenate([[vdot0, 1.0], xdot0])
    return LiftState(q, qdot)


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution curve with a dense interpolant over ``(grid, states)``.

    ``states`` rows are ``(positions, velocities)``; ``meta`` records what the
    curve is (``kind``: ``"lift"`` or ``"base"``) and, for lifts, the metric.
    """

    grid: np.ndarray
    states: np.ndarray
    interp: HermiteInterpolant
    status: str = "completed"
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.states.shape[1] // 2

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, : self.m]

    @property
    def velocities(self) -> np.ndarray:
        return self.states[:, self.m:]

    @property
    def accelerations(self) -> np.ndarray:
        return self.interp.f[:, self.m:]

    @property
    def domain(self) -> tuple[float, float]:
        return self.interp.domain

    def __call__(self, s):
        return self.interp(s)

    @classmethod
    def from_output(cls, out: SolveOutput, **meta) -> "Trajectory":
        if out.interp is None:
            raise RuntimeError(f"integration produced no accepted step (status {out.status})")
        return cls(grid=out.grid, states=out.states, interp=out.interp, status=out.status, meta=meta)


def integrate_lift(m, st0: LiftState, s0: float, s1: float, cfg: IntegratorConfig | None = None) -> Trajectory:
    y0 = st0.as_vector()
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial lift state must be finite")
    out = integrate(OdeSystem(y0.shape[0], m.geodesic_field()), y0, s0, s1, cfg)
    norm0 = m.value(st0.q, st0.qdot, st0.qdot)
    return Trajectory.from_output(out, kind="lift", metric=m, norm0=norm0)


def solve_hamiltonian(
    V: PotentialSpec, t0: float, x0, xdot0, t1: float, cfg: IntegratorConfig | None = None, *, a=None,
) -> Trajectory:
    """Integrate ``x'' = -grad V`` (componentwise divided by ``a`` when given)."""
    n = V.n
    a = np.ones(n) if a is None else np.asarray(a, dtype=float)

    def rhs(t, y):
        return np.concatenate([y[n:], -V.grad(t, y[:n]) / a])

    y0 = np.concatenate([np.asarray(x0, dtype=float).reshape(-1), np.asarray(xdot0, dtype=float).reshape(-1)])
    if y0.shape != (2 * n,):
        raise ValueError(f"initial data must have dimension {n}")
    out = integrate(OdeSystem(2 * n, rhs), y0, t0, t1, cfg)
    return Trajectory.from_output(out, kind="base", potential=V, a=a)


def project(tr: Trajectory) -> Trajectory:
    """Base curve ``t -> (x(t), dx/dt)`` of a lifted trajectory."""
    D = tr.m
    td = tr.states[:, D + 1]
    if np.min(np.abs(td)) < 1e-10:
        raise DegenerateLiftError("degenerate lift: straight line case (t-velocity vanishes)")
    if np.any(np.sign(td) != np.sign(td[0])):
        raise DegenerateLiftError("t-velocity changes sign along the lift")
    acc = tr.accelerations
    t = tr.states[:, 1]
    x = tr.states[:, 2:D]
    xd = tr.states[:, D + 2:] / td[:, None]
    tdd = acc[:, 1]
    xdd = (acc[:, 2:] * td[:, None] - tr.states[:, D + 2:] * tdd[:, None]) / td[:, None] ** 3
    states = np.hstack([x, xd])
    derivs = np.hstack([xd, xdd])
    bubble = None
    c = tr.interp.bubble
    if c is not None and np.ptp(td) == 0.0:
        # t is an affine relabeling of s, so the correction terms carry over.
        bubble = np.hstack([c[:, 2:D], c[:, D + 2:] / td[0]])
    interp = HermiteInterpolant(t, states, derivs, bubble)
    meta = {k: v for k, v in tr.meta.items() if k not in ("kind",)}
    return Trajectory(grid=t, states=states, interp=interp, status=tr.status, meta={"kind": "base", **meta})


def fd_acceleration(tr: Trajectory, s: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Second derivative of the positions by central differences of the velocities.

    Within ``h`` of either end a second-order one-sided stencil is used.
    """
    lo, hi = tr.domain
    s = np.atleast_1d(np.asarray(s, dtype=float))
    m = tr.m
    vel = lambda u: tr.interp(u)[:, m:]
    out = np.empty((s.shape[0], m))
    mid = (s >= lo + h) & (s <= hi - h)
    if np.any(mid):
        out[mid] = (vel(s[mid] + h) - vel(s[mid] - h)) / (2 * h)
    left = s < lo + h
    if np.any(left):
        u = s[left]
        out[left] = (-3 * vel(u) + 4 * vel(u + h) - vel(u + 2 * h)) / (2 * h)
    right = s > hi - h
    if np.any(right):
        u = s[right]
        out[right] = (3 * vel(u) - 4 * vel(u - h) + vel(u - 2 * h)) / (2 * h)
    return out


@dataclass(frozen=True)
class LiftReport:
    max_x_gap: float
    max_norm_drift: float
    max_hamiltonian_residual: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "max_x_gap": self.max_x_gap,
            "max_norm_drift": self.max_norm_drift,
            "max_hamiltonian_residual": self.max_hamiltonian_residual,
            "pass": self.passed,
        }


def verify_lift(V: PotentialSpec, base: Trajectory, lifted: Trajectory, tol: float = 1e-6, fd_step: float = 1e-4) -> LiftReport:
    """Check that ``lifted`` projects onto ``base`` and behaves as a geodesic."""
    metric = lifted.meta["metric"]
    a = getattr(metric, "a", np.ones(V.n))
    proj = project(lifted)
    lo = max(min(base.domain), min(proj.domain))
    hi = min(max(base.domain), max(proj.domain))
    n = V.n
    gap = 0.0
    for node_src, other in ((base, proj), (proj, base)):
        nodes = node_src.grid[(node_src.grid >= lo) & (node_src.grid <= hi)]
        if len(nodes):
            diff = node_src.interp(nodes)[:, :n] - other.interp(nodes)[:, :n]
            gap = max(gap, float(np.max(np.abs(diff))))
    norms = metric.norms(lifted.states)
    drift = float(np.max(np.abs(norms - norms[0])))

    nodes = base.grid
    xdd = fd_acceleration(base, nodes, fd_step)
    forces = np.array([-np.asarray(V.grad(t, x)) / a for t, x in zip(nodes, base.positions)])
    resid = float(np.max(np.abs(xdd - forces)))
    return LiftReport(gap, drift, resid, bool(gap <= tol and drift <= tol and resid <= tol))
