"""Potentials V(t, x) with the derivatives the lifts consume.

A :class:`PotentialSpec` bundles the value, spatial gradient, time
derivative, spatial Hessian and Laplacian of a potential. Catalog entries
carry closed forms; :func:`from_function` wraps a user-supplied value
function and fills the derivatives with central differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

__all__ = [
    "PotentialSpec",
    "DerivativeReport",
    "PotentialError",
    "PotentialEvaluationError",
    "CATALOG_NAMES",
    "catalog_get",
    "from_function",
    "check_derivatives",
    "squared_potential",
    "random_samples",
]


class PotentialError(ValueError):
    """Invalid catalog request (unknown name, bad parameter, wrong dimension)."""


class PotentialEvaluationError(RuntimeError):
    def __init__(self, message, sample):
        super().__init__(f"{message} at sample t={sample[0]!r}, x={list(np.ravel(sample[1]))!r}")
        self.sample = sample


@dataclass(frozen=True)
class PotentialSpec:
    name: str
    n: int
    eval: Callable[[float, np.ndarray], float]
    grad: Callable[[float, np.ndarray], np.ndarray]
    dt: Callable[[float, np.ndarray], float]
    hess: Callable[[float, np.ndarray], np.ndarray]
    laplacian: Callable[[float, np.ndarray], float]
    time_independent: bool = False
    params: Mapping[str, object] = field(default_factory=dict)

    def describe(self) -> dict:
        return {"name": self.name, "n": self.n, "params": dict(self.params), "time_independent": self.time_independent}


@dataclass(frozen=True)
class DerivativeReport:
    max_grad_err: float
    max_hess_err: float
    max_dt_err: float
    passed: bool


def _symmetrize(H):
    return 0.5 * (H + H.T)


def _fd_grad(V, n, step):
    def grad(t, x):
        x = np.asarray(x, dtype=float)
        h = step * max(1.0, float(np.max(np.abs(x))))
        g = np.empty(n)
        for i in range(n):
            xp = x.copy()
            xm = x.copy()
            xp[i] += h
            xm[i] -= h
            g[i] = (V(t, xp) - V(t, xm)) / (2 * h)
        return g

    return grad


def _fd_dt(V, step):
    def dt(t, x):
        h = step * max(1.0, abs(t))
        return (V(t + h, x) - V(t - h, x)) / (2 * h)

    return dt


def _fd_hess_from_grad(grad, n, step):
    def hess(t, x):
        x = np.asarray(x, dtype=float)
        h = step * max(1.0, float(np.max(np.abs(x))))
        H = np.empty((n, n))
        for j in range(n):
            xp = x.copy()
            xm = x.copy()
            xp[j] += h
            xm[j] -= h
            H[:, j] = (grad(t, xp) - grad(t, xm)) / (2 * h)
        return _symmetrize(H)

    return hess


def _fd_hess_from_value(V, n, step):
    def hess(t, x):
        x = np.asarray(x, dtype=float)
        h = step * max(1.0, float(np.max(np.abs(x))))
        H = np.empty((n, n))
        v0 = V(t, x)
        for i in range(n):
            e_i = np.zeros(n)
            e_i[i] = h
            H[i, i] = (V(t, x + e_i) - 2 * v0 + V(t, x - e_i)) / h**2
            for j in range(i + 1, n):
                e_j = np.zeros(n)
                e_j[j] = h
                H[i, j] = H[j, i] = (
                    V(t, x + e_i + e_j) - V(t, x + e_i - e_j) - V(t, x - e_i + e_j) + V(t, x - e_i - e_j)
                ) / (4 * h**2)
        return H

    return hess


def from_function(
    name: str,
    n: int,
    func: Callable[[float, np.ndarray], float],
    *,
    time_independent: bool = False,
    grad=None,
    dt=None,
    hess=None,
    step: float = 1e-6,
    hess_step: float = 1e-4,
) -> PotentialSpec:
    """Wrap a user potential; missing derivatives fall back to central differences.

    First derivatives use ``step * max(1, |x|)``. Second differences of values
    need a coarser step to stay above roundoff, hence ``hess_step``. A user or
    finite-difference Hessian is always symmetrized.
    """
    if n < 1:
        raise PotentialError("dimension must be a positive integer")
    V = lambda t, x: float(func(t, np.asarray(x, dtype=float)))  # noqa: E731
    g = grad if grad is not None else _fd_grad(V, n, step)
    if dt is not None:
        d = dt
    elif time_independent:
        d = lambda t, x: 0.0  # noqa: E731
    else:
        d = _fd_dt(V, step)
    if hess is not None:
        user_hess = hess
        H = lambda t, x: _symmetrize(np.asarray(user_hess(t, x), dtype=float))  # noqa: E731
    elif grad is not None:
        H = _fd_hess_from_grad(g, n, step * 10)
    else:
        H = _fd_hess_from_value(V, n, hess_step)
    lap = lambda t, x: float(np.trace(H(t, x)))  # noqa: E731
    return PotentialSpec(name, n, V, g, d, H, lap, time_independent=time_independent)


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

_FORCED_2D = {"saddle_harmonic", "neg_saddle", "cubic_harmonic_2d"}

_PARAM_KEYS = {
    "free": (),
    "linear": ("b",),
    "harmonic": ("k",),
    "anisotropic_harmonic": ("k",),
    "quartic_of_harmonic": ("c0", "c1"),
    "time_harmonic": ("epsilon", "omega"),
    "saddle_harmonic": (),
    "neg_saddle": (),
    "cubic_harmonic_2d": (),
}

CATALOG_NAMES = tuple(_PARAM_KEYS)


def _vector_param(value, n, label):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        return np.full(n, float(arr[0]))
    if arr.shape != (n,):
        raise PotentialError(f"parameter {label!r} needs 1 or {n} entries, got {arr.size}")
    return arr


def _scalar_param(params, key, default):
    value = params.get(key, default)
    try:
        value = float(value)
    except (TypeError, ValueError) as exc:
        raise PotentialError(f"parameter {key!r} must be a real number") from exc
    if not np.isfinite(value):
        raise PotentialError(f"parameter {key!r} must be finite")
    return value


def catalog_get(name: str, params: Mapping | None = None, n: int | None = None) -> PotentialSpec:
    """Return a catalog potential with closed-form derivatives.

    ``n`` defaults to 2 for the planar harmonic entries and 1 otherwise.
    """
    params = dict(params or {})
    if name not in _PARAM_KEYS:
        raise PotentialError(f"unknown potential {name!r}; known: {', '.join(CATALOG_NAMES)}")
    unknown = set(params) - set(_PARAM_KEYS[name])
    if unknown:
        raise PotentialError(f"unknown parameter(s) for {name!r}: {', '.join(sorted(unknown))}")
    if n is None:
        n = 2 if name in _FORCED_2D else 1
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise PotentialError(f"dimension must be a positive integer, got {n!r}")
    n = int(n)
    if name in _FORCED_2D and n != 2:
        raise PotentialError(f"potential {name!r} is defined for n=2 only, got n={n}")
    builder = globals()["_build_" + name]
    return builder(n, params)


def _spec(name, n, V, grad, dt, hess, lap, time_independent, params):
    return PotentialSpec(
        name=name, n=n, eval=V, grad=grad, dt=dt, hess=hess, laplacian=lap,
        time_independent=time_independent, params=params,
    )


def _zero(t, x):
    return 0.0


def _build_free(n, params):
    zeros = np.zeros(n)
    zz = np.zeros((n, n))
    return _spec("free", n, _zero, lambda t, x: zeros.copy(), _zero, lambda t, x: zz.copy(), _zero, True, {})


def _build_linear(n, params):
    b = _vector_param(params.get("b", 1.0), n, "b")
    zz = np.zeros((n, n))
    return _spec(
        "linear", n,
        lambda t, x: float(b @ x),
        lambda t, x: b.copy(),
        _zero,
        lambda t, x: zz.copy(),
        _zero,
        True,
        {"b": b.tolist()},
    )


def _build_harmonic(n, params):
    k = _scalar_param(params, "k", 1.0)
    eye = np.eye(n)
    return _spec(
        "harmonic", n,
        lambda t, x: 0.5 * k * float(x @ x),
        lambda t, x: k * np.asarray(x, dtype=float),
        _zero,
        lambda t, x: k * eye,
        lambda t, x: k * n,
        True,
        {"k": k},
    )


def _build_anisotropic_harmonic(n, params):
    k = _vector_param(params.get("k", np.arange(1, n + 1)), n, "k")
    H = np.diag(k)
    total = float(k.sum())
    return _spec(
        "anisotropic_harmonic", n,
        lambda t, x: 0.5 * float(k @ (np.asarray(x) ** 2)),
        lambda t, x: k * np.asarray(x, dtype=float),
        _zero,
        lambda t, x: H.copy(),
        lambda t, x: total,
        True,
        {"k": k.tolist()},
    )


def _build_quartic_of_harmonic(n, params):
    c0 = _scalar_param(params, "c0", 1.0)
    c1 = _scalar_param(params, "c1", 0.0)

    def inner(x):
        return c0 * 0.5 * float(x @ x) + c1

    def grad(t, x):
        x = np.asarray(x, dtype=float)
        return 2 * inner(x) * c0 * x

    def hess(t, x):
        x = np.asarray(x, dtype=float)
        return 2 * c0 * c0 * np.outer(x, x) + 2 * inner(x) * c0 * np.eye(n)

    def lap(t, x):
        x = np.asarray(x, dtype=float)
        return 2 * c0 * c0 * float(x @ x) + 2 * inner(x) * c0 * n

    return _spec(
        "quartic_of_harmonic", n, lambda t, x: inner(np.asarray(x, dtype=float)) ** 2,
        grad, _zero, hess, lap, True, {"c0": c0, "c1": c1},
    )


def _build_time_harmonic(n, params):
    eps = _scalar_param(params, "epsilon", 0.5)
    om = _scalar_param(params, "omega", 1.0)
    eye = np.eye(n)

    def amp(t):
        return 1.0 + eps * np.sin(om * t)

    return _spec(
        "time_harmonic", n,
        lambda t, x: 0.5 * amp(t) * float(x @ x),
        lambda t, x: amp(t) * np.asarray(x, dtype=float),
        lambda t, x: 0.5 * eps * om * np.cos(om * t) * float(x @ x),
        lambda t, x: amp(t) * eye,
        lambda t, x: amp(t) * n,
        eps == 0.0,
        {"epsilon": eps, "omega": om},
    )


def _build_saddle_harmonic(n, params):
    H = np.diag([1.0, -1.0])
    return _spec(
        "saddle_harmonic", 2,
        lambda t, x: 0.5 * (x[0] * x[0] - x[1] * x[1]),
        lambda t, x: np.array([x[0], -x[1]], dtype=float),
        _zero,
        lambda t, x: H.copy(),
        _zero,
        True,
        {},
    )


def _build_neg_saddle(n, params):
    H = np.diag([-1.0, 1.0])
    return _spec(
        "neg_saddle", 2,
        lambda t, x: 0.5 * (x[1] * x[1] - x[0] * x[0]),
        lambda t, x: np.array([-x[0], x[1]], dtype=float),
        _zero,
        lambda t, x: H.copy(),
        _zero,
        True,
        {},
    )


def _build_cubic_harmonic_2d(n, params):
    def hess(t, x):
        return np.array([[2 * x[0], -2 * x[1]], [-2 * x[1], -2 * x[0]]], dtype=float)

    return _spec(
        "cubic_harmonic_2d", 2,
        lambda t, x: x[0] ** 3 / 3.0 - x[0] * x[1] ** 2,
        lambda t, x: np.array([x[0] ** 2 - x[1] ** 2, -2 * x[0] * x[1]], dtype=float),
        _zero,
        hess,
        _zero,
        True,
        {},
    )


def squared_potential(V: PotentialSpec, c0: float = 1.0, c1: float = 0.0) -> PotentialSpec:
    """The potential ``(c0 V + c1)**2`` with derivatives built from those of ``V``."""

    def inner(t, x):
        return c0 * V.eval(t, x) + c1

    def grad(t, x):
        return 2 * c0 * inner(t, x) * V.grad(t, x)

    def dt(t, x):
        return 2 * c0 * inner(t, x) * V.dt(t, x)

    def hess(t, x):
        g = V.grad(t, x)
        return 2 * c0 * c0 * np.outer(g, g) + 2 * c0 * inner(t, x) * V.hess(t, x)

    def lap(t, x):
        g = V.grad(t, x)
        return 2 * c0 * c0 * float(g @ g) + 2 * c0 * inner(t, x) * V.laplacian(t, x)

    return PotentialSpec(
        name=f"square({V.name})", n=V.n, eval=lambda t, x: inner(t, x) ** 2, grad=grad, dt=dt,
        hess=hess, laplacian=lap, time_independent=V.time_independent,
        params={"base": V.name, "c0": c0, "c1": c1},
    )


def random_samples(n: int, count: int, rng: np.random.Generator, box: float = 2.0, t_box: float = 3.0):
    """``count`` points ``(t, x)`` drawn uniformly from ``[-t_box, t_box] x [-box, box]^n``."""
    ts = rng.uniform(-t_box, t_box, size=count)
    xs = rng.uniform(-box, box, size=(count, n))
    return [(float(t), x) for t, x in zip(ts, xs)]


def check_derivatives(
    spec: PotentialSpec,
    samples: Iterable[tuple[float, np.ndarray]],
    h: float = 1e-5,
    tol: float = 1e-6,
) -> DerivativeReport:
    """Compare analytic derivatives with central differences of step ``h``.

    Gradient and time derivative are differenced from ``eval``; the Hessian
    is differenced from ``grad``, since second differences of values at
    ``h = 1e-5`` sit at the 1e-6 roundoff level.
    """
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    samples = list(samples)
    if not samples:
        raise ValueError("at least one sample is required")
    n = spec.n
    ge = he = de = 0.0
    for t, x in samples:
        x = np.asarray(x, dtype=float)
        try:
            g = np.asarray(spec.grad(t, x), dtype=float)
            H = np.asarray(spec.hess(t, x), dtype=float)
            d = float(spec.dt(t, x))
            g_fd = np.empty(n)
            H_fd = np.empty((n, n))
            for i in range(n):
                e = np.zeros(n)
                e[i] = h
                g_fd[i] = (spec.eval(t, x + e) - spec.eval(t, x - e)) / (2 * h)
                H_fd[:, i] = (np.asarray(spec.grad(t, x + e)) - np.asarray(spec.grad(t, x - e))) / (2 * h)
            d_fd = (spec.eval(t + h, x) - spec.eval(t - h, x)) / (2 * h)
        except Exception as exc:  # attach the offending sample
            raise PotentialEvaluationError(f"evaluation of {spec.name!r} failed: {exc}", (t, x)) from exc
        ge = max(ge, float(np.max(np.abs(g - g_fd))))
        he = max(he, float(np.max(np.abs(H - H_fd))))
        de = max(de, abs(d - d_fd))
    return DerivativeReport(ge, he, float(de), bool(ge <= tol and he <= tol and de <= tol))
