"""Scalar quadrature along dense-output curves."""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad

__all__ = ["integrate_scalar", "cumulative_integral"]


def integrate_scalar(func, a: float, b: float, tol: float = 1e-10) -> float:
    if a == b:
        return 0.0
    val, _err = quad(func, a, b, epsabs=tol, epsrel=0.0, limit=200)
    return float(val)


def cumulative_integral(func, nodes, tol: float = 1e-10) -> np.ndarray:
    """Running integral of ``func`` from ``nodes[0]`` to every node.

    Each inter-node interval is integrated separately (dense outputs are only
    piecewise smooth), with the absolute budget ``tol`` shared across intervals.
    """
    nodes = np.asarray(nodes, dtype=float)
    per = tol / max(1, nodes.shape[0] - 1)
    pieces = [integrate_scalar(func, nodes[k], nodes[k + 1], per) for k in range(nodes.shape[0] - 1)]
    return np.concatenate([[0.0], np.cumsum(pieces)])
