"""Jacobi fields, conjugate points and trajectory accumulation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .geometry import christoffel_derivatives_fd, christoffel_fd, geodesic_acceleration, riemann_from_christoffel
from .lift import Trajectory, solve_hamiltonian
from .odeint import EventSpec, IntegratorConfig, OdeSystem, SolveOutput, bisect_root, integrate, locate_events
from .potentials import PotentialSpec

__all__ = [
    "ConjugateEvent",
    "ConjugateReport",
    "JacobiRun",
    "NotGeodesicError",
    "jacobi_matrix",
    "conjugate_points",
    "generic_jacobi",
    "generic_conjugate_points",
    "VariationFamily",
    "variation_family",
    "FocusingReport",
    "check_focusing_bound",
    "AccumulationReport",
    "check_accumulation_hypotheses",
    "RANK_FACTOR",
]

RANK_FACTOR = 1e-7
_JACOBI_DEFAULT = IntegratorConfig(rtol=1e-10, atol=1e-10)
_GENERIC_DEFAULT = IntegratorConfig(rtol=1e-9, atol=1e-9)


class NotGeodesicError(ValueError):
    pass


@dataclass(frozen=True)
class ConjugateEvent:
    t_conj: float
    multiplicity: int
    singular_values: np.ndarray
    kernel: np.ndarray  # columns span the initial-derivative directions that refocus

    @property
    def sigma_min(self) -> float:
        return float(self.singular_values[-1])


@dataclass(frozen=True)
class ConjugateReport:
    events: list
    det_trace: np.ndarray  # rows (t, det)
    interval: tuple
    tau_rank: float
    sigma_trace: np.ndarray = field(default=None)  # rows (t, sigma_min)

    @property
    def times(self) -> list[float]:
        return [e.t_conj for e in self.events]

    @property
    def multiplicities(self) -> list[int]:
        return [e.multiplicity for e in self.events]

    def as_dict(self) -> dict:
        return {
            "interval": [float(self.interval[0]), float(self.interval[1])],
            "events": [{"t": float(e.t_conj), "multiplicity": int(e.multiplicity)} for e in self.events],
            "det_samples": [[float(t), float(d)] for t, d in self.det_trace],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.as_dict(), **kw)


@dataclass(frozen=True)
class JacobiRun:
    """Co-integrated geodesic and fundamental Jacobi matrix."""

    out: SolveOutput
    size: int  # matrices are size x size
    offset: int  # index where the matrix block starts in the state

    def matrix(self, y) -> np.ndarray:
        k = self.size
        return np.asarray(y)[self.offset:self.offset + k * k].reshape(k, k)

    def matrix_rate(self, y) -> np.ndarray:
        k = self.size
        o = self.offset + k * k
        return np.asarray(y)[o:o + k * k].reshape(k, k)

    def matrices(self) -> np.ndarray:
        return np.array([self.matrix(y) for y in self.out.states])


def _sigma(Mat) -> np.ndarray:
    return np.linalg.svd(Mat, compute_uv=False)


def _find_events(run: JacobiRun, t_start: float, rank_factor: float) -> ConjugateReport:
    out = run.out
    grid = out.grid
    mats = run.matrices()
    dets = np.linalg.det(mats)
    sig = np.array([_sigma(Mat) for Mat in mats])
    scale = float(np.max(sig[:, 0]))
    tau = rank_factor * scale * np.sqrt(run.size)
    interp = out.interp
    span = abs(grid[-1] - grid[0])

    def sigma_min(s):
        return _sigma(run.matrix(interp(s)))[-1]

    def sigma_slope(s):
        # d sigma_min / ds = u^T M' v; flips sign where sigma_min has its kink
        U, _sv, Vt = np.linalg.svd(run.matrix(interp(s)))
        return float(U[:, -1] @ run.matrix(interp.derivative(s)) @ Vt[-1])

    crossings = []
    ev = EventSpec(lambda s, y: float(np.linalg.det(run.matrix(y))), refine_tol=1e-13 * max(1.0, span))
    for s_star, _y in locate_events(out, ev):
        crossings.append(float(s_star))
    # even multiplicities: det touches zero without changing sign
    touches = []
    smin = sig[:, -1]
    xtol = 1e-13 * max(1.0, span)
    for k in range(1, len(grid) - 1):
        if smin[k] <= smin[k - 1] and smin[k] <= smin[k + 1] and smin[k] < 1e-2 * scale:
            a, b = sorted((grid[k - 1], grid[k + 1]))
            ga, gb = sigma_slope(a), sigma_slope(b)
            if ga < 0 < gb:
                s_star = float(bisect_root(sigma_slope, a, b, ga, xtol))
            else:
                s_star = float(minimize_scalar(sigma_min, bounds=(a, b), method="bounded", options={"xatol": xtol}).x)
            if sigma_min(s_star) < tau:
                touches.append(s_star)
    candidates = sorted(crossings, key=lambda s: abs(s - t_start)) + sorted(touches, key=lambda s: abs(s - t_start))
    events: list[ConjugateEvent] = []
    merge = 1e-5 * max(1.0, span)
    for s_star in candidates:
        if abs(s_star - t_start) <= 1e-8 * max(1.0, span):
            continue
        if any(abs(s_star - e.t_conj) <= merge for e in events):
            continue
        _U, sv, Vt = np.linalg.svd(run.matrix(interp(s_star)))
        mult = int(np.sum(sv < tau))
        if mult == 0:
            continue
        events.append(ConjugateEvent(s_star, mult, sv, Vt[-mult:].T.copy()))
    events.sort(key=lambda e: abs(e.t_conj - t_start))
    return ConjugateReport(
        events=events,
        det_trace=np.column_stack([grid, dets]),
        interval=(float(grid[0]), float(grid[-1])),
        tau_rank=float(tau),
        sigma_trace=np.column_stack([grid, smin]),
    )


def _check_cover(tr: Trajectory, t0: float, t1: float) -> None:
    lo, hi = tr.domain
    slack = 1e-9 * max(1.0, abs(hi - lo))
    if min(t0, t1) < lo - slack or max(t0, t1) > hi + slack:
        raise ValueError(f"base trajectory covers [{lo}, {hi}], which does not contain [{t0}, {t1}]")


def jacobi_matrix(
    V: PotentialSpec, base: Trajectory, t0: float | None = None, t1: float | None = None,
    cfg: IntegratorConfig | None = None, a=None,
) -> JacobiRun:
    """Solve ``M'' = -A^{-1} Hess V(t, x(t)) M`` with ``M(t0) = 0, M'(t0) = I`` alongside the base curve."""
    n = V.n
    t0 = float(base.grid[0]) if t0 is None else float(t0)
    t1 = float(base.grid[-1]) if t1 is None else float(t1)
    _check_cover(base, t0, t1)
    inv_a = np.ones(n) if a is None else 1.0 / np.asarray(a, dtype=float)
    nn = n * n

    def rhs(t, y):
        x, xd = y[:n], y[n:2 * n]
        M = y[2 * n:2 * n + nn].reshape(n, n)
        Md = y[2 * n + nn:]
        H = np.asarray(V.hess(t, x), dtype=float)
        H = 0.5 * (H + H.T)
        Mdd = -(inv_a[:, None] * H) @ M
        return np.concatenate([xd, -np.asarray(V.grad(t, x)) * inv_a, Md, Mdd.ravel()])

    y0 = np.concatenate([base.interp(t0), np.zeros(nn), np.eye(n).ravel()])
    out = integrate(OdeSystem(y0.shape[0], rhs), y0, t0, t1, cfg or _JACOBI_DEFAULT)
    return JacobiRun(out, n, 2 * n)


def conjugate_points(
    V: PotentialSpec, base: Trajectory, t0: float | None = None, t1: float | None = None,
    cfg: IntegratorConfig | None = None, a=None, rank_factor: float = RANK_FACTOR,
) -> ConjugateReport:
    """Conjugate times of ``x(t0)`` along a Hamiltonian trajectory via the reduced Jacobi system."""
    run = jacobi_matrix(V, base, t0, t1, cfg, a)
    return _find_events(run, float(run.out.grid[0]), rank_factor)


def _validate_geodesic(metric, geo: Trajectory, samples: int = 25, tol: float = 1e-6) -> None:
    norms = metric.norms(geo.states)
    drift = float(np.max(np.abs(norms - norms[0])))
    if drift > tol:
        raise NotGeodesicError(f"input curve is not a geodesic: norm drift {drift:.3g}")
    idx = np.unique(np.linspace(0, len(geo.grid) - 1, min(samples, len(geo.grid))).astype(int))
    for k in idx:
        q, u, acc = geo.positions[k], geo.velocities[k], geo.accelerations[k]
        expect = geodesic_acceleration(christoffel_fd(metric, q), u)
        err = float(np.max(np.abs(acc - expect)))
        if err > tol * (1.0 + float(np.max(np.abs(expect)))):
            raise NotGeodesicError(f"input curve is not a geodesic: acceleration residual {err:.3g} at s={geo.grid[k]}")


def generic_jacobi(metric, geo: Trajectory, cfg: IntegratorConfig | None = None, validate: bool = True) -> JacobiRun:
    """Fundamental matrix of the full Jacobi equation along ``geo`` for an arbitrary metric.

    Works with the pair ``(J, K)``, ``K`` the covariant derivative of ``J``:
    ``J' = K - Gamma(u, J)``, ``K' = -R(J, u) u - Gamma(u, K)``. Curvature
    comes from finite-difference Christoffel derivatives of ``metric``.
    """
    if validate:
        _validate_geodesic(metric, geo)
    D = geo.m
    DD = D * D

    def rhs(s, y):
        q, u = y[:D], y[D:2 * D]
        J = y[2 * D:2 * D + DD].reshape(D, D)
        K = y[2 * D + DD:].reshape(D, D)
        gam, dgam = christoffel_derivatives_fd(metric, q)
        R = riemann_from_christoffel(gam, dgam)
        Gu = np.einsum("abc,b->ac", gam, u)  # Gamma(u, .)
        RJ = np.einsum("abcd,b,d->ac", R, u, u)  # J -> R(J, u) u
        dJ = K - Gu @ J
        dK = -RJ @ J - Gu @ K
        return np.concatenate([u, geodesic_acceleration(gam, u), dJ.ravel(), dK.ravel()])

    y0 = np.concatenate([geo.states[0], np.zeros(DD), np.eye(D).ravel()])
    out = integrate(OdeSystem(y0.shape[0], rhs), y0, float(geo.grid[0]), float(geo.grid[-1]), cfg or _GENERIC_DEFAULT)
    return JacobiRun(out, D, 2 * D)


def generic_conjugate_points(
    metric, geo: Trajectory, cfg: IntegratorConfig | None = None, rank_factor: float = RANK_FACTOR,
) -> ConjugateReport:
    """Conjugate parameters along a geodesic of any metric (independent of the reduced system)."""
    run = generic_jacobi(metric, geo, cfg)
    return _find_events(run, float(run.out.grid[0]), rank_factor)


@dataclass(frozen=True)
class VariationFamily:
    s_values: np.ndarray
    members: list
    reference_index: int
    jdot0: np.ndarray

    @property
    def reference(self) -> Trajectory:
        return self.members[self.reference_index]

    @property
    def domain(self) -> tuple[float, float]:
        lo = max(min(m.domain) for m in self.members)
        hi = min(max(m.domain) for m in self.members)
        return lo, hi

    def spread_at(self, t: float) -> float:
        """Largest base-space distance of any member from the reference at time ``t``."""
        lo, hi = self.domain
        if not (lo - 1e-12 <= t <= hi + 1e-12):
            raise ValueError(f"t={t} outside the common domain [{lo}, {hi}]")
        ref = self.reference
        n = ref.m
        x_ref = ref.interp(t)[:n]
        return float(max(np.linalg.norm(m.interp(t)[:n] - x_ref) for m in self.members))


def variation_family(
    V: PotentialSpec, base: Trajectory, Jdot0, epsilon: float, k: int = 5, cfg: IntegratorConfig | None = None,
) -> VariationFamily:
    """Solutions through ``x(t0)`` with velocities ``xdot(t0) + s Jdot0`` for ``k`` values of ``s``."""
    Jdot0 = np.asarray(Jdot0, dtype=float).reshape(-1)
    if Jdot0.shape != (V.n,):
        raise ValueError(f"Jdot0 must have dimension {V.n}")
    if not np.any(Jdot0 != 0):
        raise ValueError("Jdot0 must be nonzero to produce distinct solutions")
    if k < 3 or k % 2 == 0:
        raise ValueError("k must be an odd integer >= 3 so that s = 0 is a member")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    t0, t1 = float(base.grid[0]), float(base.grid[-1])
    x0, xd0 = base.positions[0], base.velocities[0]
    a = base.meta.get("a")
    s_values = np.linspace(-epsilon, epsilon, k)
    s_values[k // 2] = 0.0
    members = []
    for s in s_values:
        if s == 0.0:
            members.append(base)
        else:
            members.append(solve_hamiltonian(V, t0, x0, xd0 + s * Jdot0, t1, cfg, a=a))
    return VariationFamily(s_values, members, k // 2, Jdot0)


def _grid_within(tr: Trajectory, lo: float, hi: float) -> np.ndarray:
    g = tr.grid[(tr.grid >= lo) & (tr.grid <= hi)]
    return np.unique(np.concatenate([g, [lo, hi]]))


@dataclass(frozen=True)
class FocusingReport:
    holds: bool
    min_laplacian: float
    bound: float
    dim_constant: float

    def as_dict(self) -> dict:
        return {"holds": self.holds, "min_laplacian": self.min_laplacian, "bound": self.bound, "dim_constant": self.dim_constant}


def check_focusing_bound(V: PotentialSpec, base: Trajectory, b: float, dim_constant: float | None = None) -> FocusingReport:
    """Is the Laplacian of ``V`` along ``x`` on ``[t_start, b]`` bounded below by ``dim_constant pi^2 / b^2``?"""
    if not b > 0:
        raise ValueError("b must be positive")
    t_start = float(min(base.domain))
    _check_cover(base, t_start, b)
    dim_constant = float(V.n - 1) if dim_constant is None else float(dim_constant)
    ts = _grid_within(base, t_start, b)
    n = V.n
    lap = [float(V.laplacian(t, base.interp(t)[:n])) for t in ts]
    lo = float(min(lap))
    bound = dim_constant * np.pi**2 / b**2
    return FocusingReport(bool(lo >= bound), lo, float(bound), dim_constant)


@dataclass(frozen=True)
class AccumulationReport:
    t0_found: float | None
    i: int | None
    Vij_nonzero: bool
    laplacian_nonneg: bool
    all_hold: bool
    min_laplacian: float

    def as_dict(self) -> dict:
        return {
            "t0_found": self.t0_found,
            "i": self.i,
            "Vij_nonzero": self.Vij_nonzero,
            "laplacian_nonneg": self.laplacian_nonneg,
            "all_hold": self.all_hold,
            "min_laplacian": self.min_laplacian,
        }


def check_accumulation_hypotheses(V: PotentialSpec, base: Trajectory, vel_tol: float = 1e-9) -> AccumulationReport:
    """Look for a turning time of some velocity component and check the Hessian and Laplacian conditions."""
    n = V.n
    grid = base.grid
    candidates: list[tuple[float, int]] = []
    for i in range(n):
        comp = base.velocities[:, i]
        hits = np.flatnonzero(np.abs(comp) <= vel_tol)
        if hits.size:
            candidates.append((float(grid[hits[0]]), i))
            continue
        ev = EventSpec(lambda s, y, i=i: float(y[n + i]), refine_tol=1e-13 * max(1.0, abs(grid[-1] - grid[0])))
        for s_star, y_star in locate_events(base, ev):
            if abs(y_star[n + i]) <= vel_tol:
                candidates.append((float(s_star), i))
                break
    candidates.sort(key=lambda c: abs(c[0] - grid[0]))
    t0_found, idx, vij = None, None, False
    for t_c, i in candidates:
        H = np.asarray(V.hess(t_c, base.interp(t_c)[:n]), dtype=float)
        if t0_found is None:
            t0_found, idx = t_c, i
        if np.any(np.abs(H[i]) > 1e-12):
            t0_found, idx, vij = t_c, i, True
            break
    lap = np.array([float(V.laplacian(t, x)) for t, x in zip(grid, base.positions)])
    lap_ok = bool(np.all(lap >= -1e-12))
    return AccumulationReport(t0_found, idx, vij, lap_ok, bool(t0_found is not None and vij and lap_ok), float(lap.min()))
