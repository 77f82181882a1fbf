"""Explicit Runge-Kutta integration with Hermite dense output and event location.

Two methods are provided: classical RK4 on a fixed grid and the
Dormand-Prince 5(4) embedded pair with a PI step-size controller. Every
accepted step stores the right-hand side at its end point, so the dense
output is a piecewise cubic Hermite interpolant that reproduces the grid
states and slopes exactly. Dormand-Prince steps additionally carry the
quartic correction of the method's continuous extension, which vanishes
with its derivative at both step ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "OdeSystem",
    "IntegratorConfig",
    "HermiteInterpolant",
    "SolveOutput",
    "EventSpec",
    "IntegrationError",
    "integrate",
    "locate_events",
    "bisect_root",
]

METHODS = ("rk4_fixed", "dp54_adaptive")

COMPLETED = "completed"
BLOWUP = "blowup_suspected"
STEP_LIMIT = "step_limit"


class IntegrationError(RuntimeError):
    """Raised when the right-hand side returns a non-finite value."""

    def __init__(self, message: str, s: float, y: np.ndarray):
        super().__init__(f"{message} at s={s!r}")
        self.s = s
        self.y = np.array(y, copy=True)


@dataclass(frozen=True)
class OdeSystem:
    dim: int
    rhs: Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "dp54_adaptive"
    h0: float = 1e-3
    rtol: float = 1e-10
    atol: float = 1e-10
    max_step: float = math.inf
    max_steps: int = 200_000
    blowup_norm: float = 1e8

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown integration method {self.method!r}; expected one of {METHODS}")
        if not self.h0 > 0:
            raise ValueError("h0 must be positive")
        for name in ("rtol", "atol"):
            value = getattr(self, name)
            if not 0 < value <= 1e-1:
                raise ValueError(f"{name} must lie in (0, 1e-1], got {value}")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if not self.blowup_norm > 0:
            raise ValueError("blowup_norm must be positive")

    def with_(self, **changes) -> "IntegratorConfig":
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        return IntegratorConfig(**data)


class HermiteInterpolant:
    """Piecewise cubic Hermite interpolant through ``(s_i, y_i, f_i)``.

    The grid may be increasing or decreasing. Evaluation accepts a scalar
    (returns shape ``(dim,)``) or a 1-d array (returns ``(len, dim)``).
    ``bubble`` optionally holds one correction vector per step, added with
    weight ``theta**2 * (1 - theta)**2``.
    """

    def __init__(self, s, y, f, bubble=None):
        s = np.asarray(s, dtype=float)
        y = np.atleast_2d(np.asarray(y, dtype=float))
        f = np.atleast_2d(np.asarray(f, dtype=float))
        if s.ndim != 1 or len(s) < 2:
            raise ValueError("interpolant needs at least two nodes")
        if y.shape != f.shape or y.shape[0] != len(s):
            raise ValueError("node values and slopes must match the grid")
        if bubble is not None:
            bubble = np.atleast_2d(np.asarray(bubble, dtype=float))
            if bubble.shape != (len(s) - 1, y.shape[1]):
                raise ValueError("one correction vector per step is required")
        d = np.diff(s)
        if np.all(d > 0):
            self._s, self._y, self._f, self._c = s, y, f, bubble
        elif np.all(d < 0):
            self._s, self._y, self._f = s[::-1].copy(), y[::-1].copy(), f[::-1].copy()
            self._c = None if bubble is None else bubble[::-1].copy()
        else:
            raise ValueError("interpolation grid must be strictly monotone")
        self.s = s
        self.y = y
        self.f = f
        self.bubble = bubble
        span = self._s[-1] - self._s[0]
        self._slack = 1e-12 * max(1.0, abs(self._s[0]), abs(self._s[-1]), span)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self._s[0]), float(self._s[-1])

    def _locate(self, s: np.ndarray) -> np.ndarray:
        lo, hi = self._s[0], self._s[-1]
        if np.any(s < lo - self._slack) or np.any(s > hi + self._slack):
            raise ValueError(f"evaluation point outside interpolation domain [{lo}, {hi}]")
        idx = np.searchsorted(self._s, s, side="right") - 1
        return np.clip(idx, 0, len(self._s) - 2)

    def _basis(self, s, derivative: bool):
        scalar = np.ndim(s) == 0
        sv = np.atleast_1d(np.asarray(s, dtype=float))
        i = self._locate(sv)
        s0 = self._s[i]
        h = self._s[i + 1] - s0
        th = (sv - s0) / h
        th2 = th * th
        th3 = th2 * th
        if derivative:
            b00 = (6 * th2 - 6 * th) / h
            b10 = 3 * th2 - 4 * th + 1
            b01 = (6 * th - 6 * th2) / h
            b11 = 3 * th2 - 2 * th
        else:
            b00 = 2 * th3 - 3 * th2 + 1
            b10 = (th3 - 2 * th2 + th) * h
            b01 = 3 * th2 - 2 * th3
            b11 = (th3 - th2) * h
        out = (
            b00[:, None] * self._y[i]
            + b10[:, None] * self._f[i]
            + b01[:, None] * self._y[i + 1]
            + b11[:, None] * self._f[i + 1]
        )
        if self._c is not None:
            om = 1 - th
            w = 2 * th * om * (om - th) / h if derivative else th2 * om * om
            out = out + w[:, None] * self._c[i]
        return out[0] if scalar else out

    def __call__(self, s):
        return self._basis(s, derivative=False)

    def derivative(self, s):
        return self._basis(s, derivative=True)


@dataclass(frozen=True)
class SolveOutput:
    grid: np.ndarray
    states: np.ndarray
    interp: HermiteInterpolant | None
    status: str
    attempted: float | None = None
    nfev: int = 0

    @property
    def interpolant(self) -> HermiteInterpolant | None:
        return self.interp


@dataclass(frozen=True)
class EventSpec:
    g: Callable[[float, np.ndarray], float]
    refine_tol: float = 1e-12
    direction: str = "any"

    def __post_init__(self):
        if not self.refine_tol > 0:
            raise ValueError("refine_tol must be positive")
        if self.direction not in ("any", "up", "down"):
            raise ValueError("direction must be 'any', 'up' or 'down'")


# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = np.zeros((7, 7))
_DP_A[1, :1] = [1 / 5]
_DP_A[2, :2] = [3 / 40, 9 / 40]
_DP_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_DP_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_DP_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_DP_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_DP_B5 = _DP_A[6].copy()
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_DP_E = _DP_B5 - _DP_B4
# Continuous extension (Hairer, Norsett & Wanner, dopri5 "contd5").
_DP_D = np.array([
    -12715105075 / 11282082432, 0.0, 87487479700 / 32700410799, -10690763975 / 1880347072,
    701980252875 / 199316789632, -1453857185 / 822651844, 69997945 / 29380423,
])

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA
_COLLAPSE = 1e-14


def _checked(rhs, s, y):
    f = np.asarray(rhs(s, y), dtype=float)
    if not np.all(np.isfinite(f)):
        raise IntegrationError("non-finite right-hand side", s, y)
    return f


def integrate(sys: OdeSystem, y0, s0: float, s1: float, cfg: IntegratorConfig | None = None) -> SolveOutput:
    """Integrate ``y' = rhs(s, y)`` from ``s0`` to ``s1`` (either direction)."""
    cfg = cfg or IntegratorConfig()
    y0 = np.array(y0, dtype=float).reshape(-1)
    if y0.shape[0] != sys.dim:
        raise ValueError(f"initial state has dimension {y0.shape[0]}, system expects {sys.dim}")
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial state must be finite")
    if s1 == s0:
        raise ValueError("integration interval is empty")
    if cfg.method == "rk4_fixed":
        return _integrate_rk4(sys.rhs, y0, float(s0), float(s1), cfg)
    return _integrate_dp54(sys.rhs, y0, float(s0), float(s1), cfg)


def _finish(grid, states, derivs, status, attempted=None, nfev=0, bubbles=None) -> SolveOutput:
    grid = np.asarray(grid)
    states = np.asarray(states)
    derivs = np.asarray(derivs)
    # A failure on the very first step leaves a single node and no interpolant.
    if len(grid) >= 2:
        interp = HermiteInterpolant(grid, states, derivs, None if bubbles is None else np.asarray(bubbles))
    else:
        interp = None
    return SolveOutput(grid=grid, states=states, interp=interp, status=status, attempted=attempted, nfev=nfev)


def _integrate_rk4(rhs, y0, s0, s1, cfg) -> SolveOutput:
    span = s1 - s0
    nsteps = max(1, int(math.ceil(abs(span) / cfg.h0 - 1e-12)))
    status = COMPLETED
    if nsteps > cfg.max_steps:
        nsteps = cfg.max_steps
        status = STEP_LIMIT
        span = math.copysign(cfg.h0 * nsteps, span)
    h = span / nsteps
    grid = [s0]
    states = [y0]
    f = _checked(rhs, s0, y0)
    derivs = [f]
    y = y0
    s = s0
    nfev = 1
    for k in range(1, nsteps + 1):
        k1 = f
        k2 = _checked(rhs, s + h / 2, y + h / 2 * k1)
        k3 = _checked(rhs, s + h / 2, y + h / 2 * k2)
        k4 = _checked(rhs, s + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s = s0 + k * h
        f = _checked(rhs, s, y)
        nfev += 4
        if np.max(np.abs(y)) > cfg.blowup_norm:
            return _finish(grid, states, derivs, BLOWUP, attempted=s, nfev=nfev)
        grid.append(s)
        states.append(y)
        derivs.append(f)
    return _finish(grid, states, derivs, status, nfev=nfev)


def _integrate_dp54(rhs, y0, s0, s1, cfg) -> SolveOutput:
    direction = 1.0 if s1 > s0 else -1.0
    length = abs(s1 - s0)
    h_min = _COLLAPSE * length
    h_abs = min(cfg.h0, cfg.max_step, length)
    dim = y0.shape[0]
    K = np.empty((7, dim))
    A = _DP_A
    C = _DP_C
    E = _DP_E
    atol, rtol = cfg.atol, cfg.rtol

    s = s0
    y = y0
    f = _checked(rhs, s, y)
    nfev = 1
    grid = [s]
    states = [y]
    derivs = [f]
    bubbles = []
    err_prev = 1e-4
    rejected = False
    steps = 0
    while True:
        remaining = (s1 - s) * direction
        if remaining <= h_min * 0.5 or remaining <= 0:
            break
        if steps >= cfg.max_steps:
            return _finish(grid, states, derivs, STEP_LIMIT, nfev=nfev, bubbles=bubbles)
        last = h_abs >= remaining
        if last:
            h_abs = remaining
        h = h_abs * direction
        K[0] = f
        for i in range(1, 7):
            K[i] = _checked(rhs, s + C[i] * h, y + h * (A[i, :i] @ K[:i]))
        nfev += 6
        y_new = y + h * (A[6, :6] @ K[:6])
        err_vec = h * (E @ K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
        steps += 1
        if err <= 1.0:
            s_new = s1 if last else s + h
            if np.max(np.abs(y_new)) > cfg.blowup_norm:
                return _finish(grid, states, derivs, BLOWUP, attempted=s_new, nfev=nfev, bubbles=bubbles)
            bubbles.append(h * (_DP_D @ K))
            s = s_new
            y = y_new
            f = K[6].copy()
            grid.append(s)
            states.append(y)
            derivs.append(f)
            if err == 0.0:
                fac = _FAC_MAX
            else:
                fac = _SAFETY * err ** (-_ALPHA) * err_prev ** _BETA
                fac = min(_FAC_MAX, max(_FAC_MIN, fac))
            if rejected:
                fac = min(1.0, fac)
            h_abs = min(h_abs * fac, cfg.max_step)
            err_prev = max(err, 1e-4)
            rejected = False
        else:
            fac = max(_FAC_MIN, _SAFETY * err ** (-0.2))
            h_abs *= fac
            rejected = True
            if h_abs < h_min:
                return _finish(
                    grid, states, derivs, BLOWUP, attempted=s + h_abs * direction, nfev=nfev, bubbles=bubbles
                )
    return _finish(grid, states, derivs, COMPLETED, nfev=nfev, bubbles=bubbles)


def bisect_root(fun: Callable[[float], float], a: float, b: float, fa: float, tol: float, max_iter: int = 80) -> float:
    """Bisection on a bracketing interval; returns the bracket midpoint."""
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        m = 0.5 * (a + b)
        fm = fun(m)
        if fm == 0.0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def locate_events(out, ev: EventSpec) -> list[tuple[float, np.ndarray]]:
    """Sign changes of ``ev.g`` along the dense output of ``out``.

    ``out`` is anything exposing ``grid``, ``states`` and ``interp`` (a
    :class:`SolveOutput` or a trajectory). Zeros where ``g`` touches zero
    without changing sign are not guaranteed to be found.
    """
    status = getattr(out, "status", COMPLETED)
    if status not in (COMPLETED, BLOWUP):
        raise ValueError(f"cannot locate events on output with status {status!r}")
    grid = out.grid
    interp = out.interp
    g_nodes = np.array([float(ev.g(s, y)) for s, y in zip(grid, out.states)])

    def g_at(s):
        return float(ev.g(s, interp(s)))

    def wanted(before: float) -> bool:
        # before < 0 means g goes up through zero
        if ev.direction == "any":
            return True
        return (before < 0) == (ev.direction == "up")

    events = []
    for i in range(len(grid) - 1):
        ga, gb = g_nodes[i], g_nodes[i + 1]
        if ga == 0.0:
            continue
        if gb == 0.0:
            if wanted(ga):
                events.append((float(grid[i + 1]), np.array(out.states[i + 1])))
            continue
        if (ga > 0) != (gb > 0) and wanted(ga):
            root = bisect_root(g_at, float(grid[i]), float(grid[i + 1]), ga, ev.refine_tol)
            events.append((root, interp(root)))
    return events
