"""Lifting ``z'' = F(z)`` (``F`` holomorphic) to split-signature pp-waves.

A harmonic potential ``V(x, y)`` determines ``F = V_x - i V_y``; solutions of
``x'' = V_x, y'' = -V_y`` are then geodesics of
``2 dv dt - 2V dt^2 - dx^2 + dy^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lift import BrinkmannMetric, LiftState, Trajectory, causal_class, fd_acceleration, solve_hamiltonian
from .odeint import BLOWUP, IntegratorConfig, OdeSystem, integrate
from .potentials import PotentialSpec, random_samples

__all__ = [
    "SPLIT_A",
    "NonHarmonicError",
    "HolomorphicSystem",
    "f_from_potential",
    "SplitMetric",
    "split_geodesic_rhs",
    "complex_lift_initial",
    "solve_complex",
    "ComplexReport",
    "verify_complex_solution",
    "BlowupReport",
    "detect_blowup",
]

SPLIT_A = np.array([-1.0, 1.0])
_HARMONIC_TOL = 1e-10


class NonHarmonicError(ValueError):
    def __init__(self, message: str, max_laplacian: float):
        super().__init__(message)
        self.max_laplacian = max_laplacian


def _require_plane(V: PotentialSpec) -> None:
    if V.n != 2:
        raise ValueError(f"complex lifts need a potential on the plane (n=2), got n={V.n}")


@dataclass(frozen=True)
class HolomorphicSystem:
    V: PotentialSpec
    max_laplacian: float
    cr_residual: float

    def F(self, x, y, t: float = 0.0) -> np.ndarray:
        """``(Re F, Im F) = (V_x, -V_y)`` at ``z = x + i y``."""
        g = np.asarray(self.V.grad(t, np.array([x, y], dtype=float)), dtype=float)
        return np.array([g[0], -g[1]])

    def F_complex(self, z: complex, t: float = 0.0) -> complex:
        re, im = self.F(z.real, z.imag, t)
        return complex(re, im)


def cauchy_riemann_residual(H: HolomorphicSystem, samples, h: float = 1e-5) -> float:
    """Largest Cauchy-Riemann defect of ``F`` by central differences."""
    worst = 0.0
    for t, p in samples:
        x, y = p
        Fx = (H.F(x + h, y, t) - H.F(x - h, y, t)) / (2 * h)
        Fy = (H.F(x, y + h, t) - H.F(x, y - h, t)) / (2 * h)
        worst = max(worst, abs(Fx[0] - Fy[1]), abs(Fy[0] + Fx[1]))
    return float(worst)


def f_from_potential(V: PotentialSpec, samples: int = 100, seed: int = 0, box: float = 2.0) -> HolomorphicSystem:
    """Holomorphic right-hand side of a harmonic potential, with its checks attached."""
    _require_plane(V)
    rng = np.random.default_rng(seed)
    pts = random_samples(2, samples, rng, box=box, t_box=0.0 if V.time_independent else 3.0)
    lap = max(abs(float(V.laplacian(t, x))) for t, x in pts)
    if lap > _HARMONIC_TOL:
        raise NonHarmonicError(f"potential {V.name!r} is not harmonic: max |Laplacian| = {lap:.3g}", lap)
    H = HolomorphicSystem(V, lap, 0.0)
    return HolomorphicSystem(V, lap, cauchy_riemann_residual(H, pts))


class SplitMetric(BrinkmannMetric):
    """``2 dv dt - 2 V dt^2 - dx^2 + dy^2`` in coordinates ``(v, t, x, y)``."""

    def __init__(self, V: PotentialSpec):
        _require_plane(V)
        super().__init__(V, SPLIT_A)

    def describe(self) -> dict:
        return {"type": "split", "potential": self.V.describe()}

    def geodesic_field(self):
        V, D = self.V, self.dim

        def rhs(s, y):
            t, x = y[1], y[2:D]
            td, xd = y[D + 1], y[D + 2:]
            g = np.asarray(V.grad(t, x), dtype=float)
            Vt = V.dt(t, x)
            dVds = Vt * td + g @ xd
            acc = np.array([(2 * dVds - Vt * td) * td, 0.0, g[0] * td * td, -g[1] * td * td])
            return np.concatenate([y[D:], acc])

        return rhs


def split_geodesic_rhs(m: SplitMetric, st: LiftState) -> LiftState:
    d = m.geodesic_field()(0.0, np.concatenate([st.q, st.qdot]))
    return LiftState(d[:4], d[4:])


def complex_lift_initial(V: PotentialSpec, t0: float, z0, zdot0, c="lightlike", v0: float = 0.0) -> LiftState:
    """Initial data with ``vdot0 = V + xdot0^2/2 - ydot0^2/2 + eps`` (the split-metric normalization)."""
    _require_plane(V)
    c = causal_class(c)
    z0 = np.asarray(z0, dtype=float).reshape(-1)
    zd = np.asarray(zdot0, dtype=float).reshape(-1)
    if z0.shape != (2,) or zd.shape != (2,):
        raise ValueError("z0 and zdot0 must be (x, y) pairs")
    lap = abs(float(V.laplacian(t0, z0)))
    if lap > _HARMONIC_TOL:
        raise NonHarmonicError(f"potential {V.name!r} is not harmonic at z0 (|Laplacian| = {lap:.3g})", lap)
    vdot0 = V.eval(t0, z0) + 0.5 * zd[0] ** 2 - 0.5 * zd[1] ** 2 + c.epsilon
    return LiftState(np.array([v0, t0, z0[0], z0[1]]), np.array([vdot0, 1.0, zd[0], zd[1]]))


def solve_complex(H: HolomorphicSystem, t0: float, z0, zdot0, t1: float, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Direct integration of ``z'' = F(z)`` written as ``x'' = V_x, y'' = -V_y``."""
    return solve_hamiltonian(H.V, t0, z0, zdot0, t1, cfg, a=SPLIT_A)


@dataclass(frozen=True)
class ComplexReport:
    max_residual: float
    passed: bool

    def as_dict(self) -> dict:
        return {"max_residual": self.max_residual, "pass": self.passed}


def verify_complex_solution(traj: Trajectory, H: HolomorphicSystem, tol: float = 1e-5, fd_step: float = 1e-4) -> ComplexReport:
    acc = fd_acceleration(traj, traj.grid, fd_step)
    F = np.array([H.F(x, y, t) for t, (x, y) in zip(traj.grid, traj.positions)])
    resid = float(np.max(np.abs(acc - F)))
    return ComplexReport(resid, bool(resid <= tol))


@dataclass(frozen=True)
class BlowupReport:
    blown_up: bool
    t_bracket: tuple | None
    status: str
    last_t: float

    def as_dict(self) -> dict:
        return {
            "blown_up": self.blown_up,
            "t_bracket": None if self.t_bracket is None else [float(v) for v in self.t_bracket],
            "status": self.status,
            "last_t": self.last_t,
        }


def detect_blowup(H: HolomorphicSystem, z0, zdot0, horizon: float, cfg: IntegratorConfig | None = None) -> BlowupReport:
    """Flag escape before ``horizon``; the bracket is the last accepted step ``[t_last, t_attempted]``."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    cfg = cfg or IntegratorConfig(rtol=1e-10, atol=1e-10)

    def rhs(t, w):
        return np.concatenate([w[2:], H.F(w[0], w[1], t)])

    y0 = np.concatenate([np.asarray(z0, dtype=float), np.asarray(zdot0, dtype=float)])
    out = integrate(OdeSystem(4, rhs), y0, 0.0, float(horizon), cfg)
    last = float(out.grid[-1])
    if out.status == BLOWUP:
        return BlowupReport(True, (last, float(out.attempted)), out.status, last)
    return BlowupReport(False, None, out.status, last)
