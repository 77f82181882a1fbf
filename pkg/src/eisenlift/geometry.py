"""Coordinate differential geometry of an arbitrary metric by finite differences.

These routines know nothing about pp-waves: a metric is any callable (or
object with a ``matrix`` method) returning the ``D x D`` component matrix
at a point. They are the independent side of every Christoffel, geodesic
and Jacobi cross-check in the package.

Index conventions: ``dg[k, a, b] = d_k g_ab``, ``gamma[a, b, c]`` is the
symbol with upper index ``a``, ``dgamma[k, a, b, c] = d_k gamma[a, b, c]``
and ``riemann[a, b, c, d]`` is ``R^a_{bcd}`` with
``R(d_c, d_d) d_b = R^a_{bcd} d_a``.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "metric_function",
    "metric_derivatives_fd",
    "christoffel_from_derivatives",
    "christoffel_fd",
    "christoffel_derivatives_fd",
    "riemann_from_christoffel",
    "geodesic_acceleration",
    "geodesic_field_fd",
]


def metric_function(metric):
    """Normalize ``metric`` to a callable ``p -> (D, D) array``."""
    if hasattr(metric, "matrix"):
        return metric.matrix
    if callable(metric):
        return metric
    raise TypeError("metric must be callable or expose a matrix(p) method")


def metric_derivatives_fd(metric, p, h: float = 1e-5) -> np.ndarray:
    G = metric_function(metric)
    p = np.asarray(p, dtype=float)
    D = p.shape[0]
    dg = np.empty((D, D, D))
    for k in range(D):
        e = np.zeros(D)
        e[k] = h
        dg[k] = (G(p + e) - G(p - e)) / (2 * h)
    return dg


def christoffel_from_derivatives(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    # lowered[d, b, c] = 1/2 (d_b g_dc + d_c g_db - d_d g_bc)
    lowered = 0.5 * (np.transpose(dg, (1, 0, 2)) + np.transpose(dg, (1, 2, 0)) - dg)
    return np.einsum("ad,dbc->abc", np.linalg.inv(g), lowered)


def christoffel_fd(metric, p, h: float = 1e-5) -> np.ndarray:
    G = metric_function(metric)
    p = np.asarray(p, dtype=float)
    return christoffel_from_derivatives(G(p), metric_derivatives_fd(G, p, h))


def christoffel_derivatives_fd(metric, p, h_metric: float = 1e-4, h: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """Christoffel symbols at ``p`` and their coordinate derivatives.

    The derivatives are central differences (step ``h``) of symbols that are
    themselves differenced from the metric with step ``h_metric``.
    """
    G = metric_function(metric)
    p = np.asarray(p, dtype=float)
    D = p.shape[0]
    gamma = christoffel_fd(G, p, h_metric)
    dgamma = np.empty((D, D, D, D))
    for k in range(D):
        e = np.zeros(D)
        e[k] = h
        dgamma[k] = (christoffel_fd(G, p + e, h_metric) - christoffel_fd(G, p - e, h_metric)) / (2 * h)
    return gamma, dgamma


def riemann_from_christoffel(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    # R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb}
    term = np.einsum("cadb->abcd", dgamma)
    quad = np.einsum("ace,edb->abcd", gamma, gamma)
    return term - np.swapaxes(term, 2, 3) + quad - np.swapaxes(quad, 2, 3)


def geodesic_acceleration(gamma: np.ndarray, u: np.ndarray) -> np.ndarray:
    return -np.einsum("abc,b,c->a", gamma, u, u)


def geodesic_field_fd(metric, h: float = 1e-5):
    """Right-hand side ``(s, (q, qdot)) -> (qdot, qddot)`` from FD Christoffels."""
    G = metric_function(metric)

    def rhs(s, y):
        D = y.shape[0] // 2
        q, u = y[:D], y[D:]
        return np.concatenate([u, geodesic_acceleration(christoffel_fd(G, q, h), u)])

    return rhs
