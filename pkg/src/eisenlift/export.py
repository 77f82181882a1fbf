"""Deterministic CSV/JSON writers for trajectories and reports."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = [
    "format_row",
    "write_csv",
    "lift_csv",
    "base_csv",
    "shooting_csv",
    "series_csv",
    "write_json",
    "lift_header",
    "base_header",
    "shooting_header",
]


def format_row(values) -> str:
    return ",".join("%.17g" % float(v) for v in values)


def write_csv(path, header: list[str], rows) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    lines.extend(format_row(r) for r in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def lift_header(n: int) -> list[str]:
    xs = [f"x{i}" for i in range(1, n + 1)]
    return ["s", "v", "t", *xs, "vdot", "tdot", *[f"xdot{i}" for i in range(1, n + 1)]]


def base_header(n: int) -> list[str]:
    return ["t", *[f"x{i}" for i in range(1, n + 1)], *[f"xdot{i}" for i in range(1, n + 1)]]


def shooting_header(n: int) -> list[str]:
    return ["t", "tau", "taudot", *[f"x{i}" for i in range(1, n + 1)], *[f"xdot{i}" for i in range(1, n + 1)]]


def lift_csv(path, tr) -> Path:
    """Rows ``s, v, t, x.., vdot, tdot, xdot..`` of a lifted trajectory."""
    n = tr.m - 2
    return write_csv(path, lift_header(n), np.column_stack([tr.grid, tr.states]))


def base_csv(path, tr) -> Path:
    return write_csv(path, base_header(tr.m), np.column_stack([tr.grid, tr.states]))


def shooting_csv(path, result) -> Path:
    xc = result.x_curve
    n = xc.m
    rows = np.column_stack([xc.grid, result.tau, result.taudot, xc.states[:, :n], xc.states[:, n:]])
    return write_csv(path, shooting_header(n), rows)


def series_csv(path, names: tuple[str, str], xs, ys) -> Path:
    return write_csv(path, list(names), np.column_stack([np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)]))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path
