"""Command-line batch runner: JSON config in, CSV/JSON artifacts and a manifest out."""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .complexlift import NonHarmonicError, SplitMetric, complex_lift_initial, detect_blowup, f_from_potential, solve_complex, verify_complex_solution
from .conformal import NotLightlikeError, run_conformal_check
from .export import base_csv, lift_csv, series_csv, shooting_csv, write_json
from .lift import BrinkmannMetric, DegenerateLiftError, eisenhart_lift_initial, integrate_lift, project, solve_hamiltonian, verify_lift
from .odeint import COMPLETED, IntegrationError, IntegratorConfig
from .potentials import PotentialError, PotentialEvaluationError, catalog_get
from .riemlift import C0Warning, MarginError, ShootingConfig, ShootingError, coe_check, shoot_two_point, verify_sqrt_lift
from .stability import (
    NotGeodesicError,
    check_accumulation_hypotheses,
    check_focusing_bound,
    conjugate_points,
    generic_conjugate_points,
    variation_family,
)

__all__ = [
    "EXIT_OK",
    "EXIT_CHECK",
    "EXIT_CONFIG",
    "EXIT_NUMERIC",
    "ConfigError",
    "NumericalFailure",
    "RunResult",
    "load_schema",
    "validate_config",
    "load_config",
    "run_config",
    "run_path",
    "main",
]

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_OUT = "eisenlift_out"
MANIFEST = "manifest.json"


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


def load_schema() -> dict:
    text = resources.files("eisenlift").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


def _describe_error(err: jsonschema.ValidationError) -> str:
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"{where}: {err.message}"


def validate_config(cfg) -> list[str]:
    """Schema errors for one config object (empty when valid)."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path)))
    return [_describe_error(e) for e in errors]


def load_config(path) -> list[dict]:
    """Read a config file holding one object or a list of objects; validate every entry."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    configs = raw if isinstance(raw, list) else [raw]
    if not configs:
        raise ConfigError("config list is empty")
    problems = []
    for k, cfg in enumerate(configs):
        prefix = f"[{k}] " if isinstance(raw, list) else ""
        problems.extend(prefix + msg for msg in validate_config(cfg))
    if problems:
        raise ConfigError("invalid config:\n  " + "\n  ".join(problems))
    return configs


@dataclass
class RunResult:
    exit_code: int
    manifest: dict
    out_dir: Path
    message: str = ""


@dataclass
class _Context:
    cfg: dict
    out: Path
    prefix: str
    integrator: IntegratorConfig
    seed: int
    files: list = field(default_factory=list)

    def path(self, name: str) -> Path:
        p = self.out / f"{self.prefix}{name}"
        self.files.append(p)
        return p

    @property
    def block(self) -> dict:
        return self.cfg.get(self.cfg["command"], {})


def _potential(cfg: dict):
    p = cfg["potential"]
    return catalog_get(p["name"], p.get("params"), p.get("n"))


def _integrator(cfg: dict) -> IntegratorConfig:
    return IntegratorConfig(**cfg.get("integrator", {}))


def _require_completed(tr, what: str) -> None:
    if tr.status != COMPLETED:
        raise NumericalFailure(f"{what} stopped early ({tr.status}) at s={tr.grid[-1]:.6g}")


def _check_dimension(V, vec, label: str) -> np.ndarray:
    arr = np.asarray(vec, dtype=float)
    if arr.shape != (V.n,):
        raise ConfigError(f"{label} has length {arr.size} but the potential has n={V.n}")
    return arr


def _energy(V, tr) -> np.ndarray:
    n = tr.m
    return np.array([0.5 * float(y[n:] @ y[n:]) + float(V.eval(t, y[:n])) for t, y in zip(tr.grid, tr.states)])


def _cmd_integrate(ctx: _Context):
    V, b = _potential(ctx.cfg), ctx.block
    x0 = _check_dimension(V, b["x0"], "x0")
    xd0 = _check_dimension(V, b["xdot0"], "xdot0")
    base = solve_hamiltonian(V, b.get("t0", 0.0), x0, xd0, b.get("t1", 10.0), ctx.integrator)
    _require_completed(base, "integration")
    base_csv(ctx.path("base.csv"), base)
    E = _energy(V, base)
    series_csv(ctx.path("energy.csv"), ("t", "energy"), base.grid, E)
    report = {"status": base.status, "steps": len(base.grid) - 1, "energy_drift": float(np.max(np.abs(E - E[0])))}
    return {"completed": True}, report


def _cmd_lift(ctx: _Context):
    V, b = _potential(ctx.cfg), ctx.block
    x0 = _check_dimension(V, b["x0"], "x0")
    xd0 = _check_dimension(V, b["xdot0"], "xdot0")
    a = None if "a" not in b else _check_dimension(V, b["a"], "a")
    t0, t1 = b.get("t0", 0.0), b.get("t1", 10.0)
    m = BrinkmannMetric(V, a)
    st0 = eisenhart_lift_initial(V, t0, x0, xd0, b.get("causal", "lightlike"), a=a, v0=b.get("v0", 0.0))
    lifted = integrate_lift(m, st0, t0, t1, ctx.integrator)
    base = solve_hamiltonian(V, t0, x0, xd0, t1, ctx.integrator, a=a)
    _require_completed(lifted, "lift integration")
    _require_completed(base, "base integration")
    rep = verify_lift(V, base, lifted, b.get("tol", 1e-6))
    lift_csv(ctx.path("lift.csv"), lifted)
    base_csv(ctx.path("base.csv"), base)
    series_csv(ctx.path("energy.csv"), ("s", "norm"), lifted.grid, m.norms(lifted.states))
    return {"verify_lift": rep.passed}, {"metric": m.describe(), "causal": b.get("causal", "lightlike"), **rep.as_dict()}


def _cmd_conformal(ctx: _Context):
    V, b = _potential(ctx.cfg), ctx.block
    x0 = _check_dimension(V, b["x0"], "x0")
    xd0 = _check_dimension(V, b["xdot0"], "xdot0")
    t0, t1 = b.get("t0", 0.0), b.get("t1", 5.0)
    base = solve_hamiltonian(V, t0, x0, xd0, t1, ctx.integrator)
    _require_completed(base, "base integration")
    run = run_conformal_check(BrinkmannMetric(V), b["factor"], base, ctx.integrator, b.get("tol", 1e-6))
    lift_csv(ctx.path("lift.csv"), run.lift)
    lift_csv(ctx.path("conformal.csv"), run.reparametrized)
    series_csv(ctx.path("tau.csv"), ("s", "tau"), run.reparam.grid, run.reparam.tau)
    return {"verify_conformal_class": run.report.passed}, {"factor": b["factor"], **run.report.as_dict()}


def _cmd_conjugate(ctx: _Context):
    V, b = _potential(ctx.cfg), ctx.block
    x0 = _check_dimension(V, b["x0"], "x0")
    xd0 = _check_dimension(V, b["xdot0"], "xdot0")
    t0, t1 = b.get("t0", 0.0), b.get("t1", 10.0)
    base = solve_hamiltonian(V, t0, x0, xd0, t1, ctx.integrator)
    _require_completed(base, "base integration")
    reduced = conjugate_points(V, base, cfg=ctx.integrator)
    report = {"reduced": reduced.as_dict(), "tau_rank": reduced.tau_rank}
    checks = {}
    base_csv(ctx.path("base.csv"), base)
    series_csv(ctx.path("det.csv"), ("t", "det"), reduced.det_trace[:, 0], reduced.det_trace[:, 1])
    if b.get("generic", False):
        m = BrinkmannMetric(V)
        st0 = eisenhart_lift_initial(V, t0, x0, xd0, b.get("causal", "lightlike"))
        lifted = integrate_lift(m, st0, t0, t1, ctx.integrator)
        _require_completed(lifted, "lift integration")
        gen = generic_conjugate_points(m, lifted)
        agree = len(gen.events) == len(reduced.events) and all(
            abs(g.t_conj - r.t_conj) <= 1e-4 and g.multiplicity == r.multiplicity
            for g, r in zip(gen.events, reduced.events)
        )
        checks["reduced_generic_agree"] = agree
        report["generic"] = gen.as_dict()
    var = b.get("variation")
    if var is not None:
        jdot0 = _check_dimension(V, var.get("jdot0", [1.0] * V.n), "variation.jdot0")
        fam = variation_family(V, base, jdot0, var.get("epsilon", 0.05), var.get("k", 5), ctx.integrator)
        ts = np.linspace(*sorted(fam.domain), 201)
        spread = np.array([fam.spread_at(t) for t in ts])
        series_csv(ctx.path("spread.csv"), ("t", "spread"), ts, spread)
        report["variation"] = {"epsilon": var.get("epsilon", 0.05), "k": var.get("k", 5), "max_spread": float(spread.max())}
    if "focusing_b" in b:
        report["focusing"] = check_focusing_bound(V, base, b["focusing_b"], b.get("dim_constant")).as_dict()
    if b.get("hypotheses", False):
        hyp = check_accumulation_hypotheses(V, base)
        report["hypotheses"] = hyp.as_dict()
        # when the hypotheses hold the trajectory must accumulate somewhere on the interval
        checks["hypotheses_imply_event"] = (not hyp.all_hold) or bool(reduced.events)
    return checks, report


def _cmd_complex(ctx: _Context):
    V, b = _potential(ctx.cfg), ctx.block
    if V.n != 2:
        raise ConfigError("complex runs need a potential with n=2")
    try:
        H = f_from_potential(V, seed=ctx.seed)
    except NonHarmonicError as exc:
        raise ConfigError(str(exc)) from exc
    z0 = np.asarray(b["z0"], dtype=float)
    zd0 = np.asarray(b["zdot0"], dtype=float)
    if z0.shape != (2,) or zd0.shape != (2,):
        raise ConfigError("z0 and zdot0 must be (x, y) pairs")
    t0, t1 = b.get("t0", 0.0), b.get("t1", 3.0)
    expect = b.get("expect_blowup", False)
    checks, report = {}, {"max_laplacian": H.max_laplacian, "cr_residual": H.cr_residual}
    m = SplitMetric(V)
    lifted = integrate_lift(m, complex_lift_initial(V, t0, z0, zd0, b.get("causal", "lightlike")), t0, t1, ctx.integrator)
    direct = solve_complex(H, t0, z0, zd0, t1, ctx.integrator)
    if lifted.status == COMPLETED and direct.status == COMPLETED:
        proj = project(lifted)
        nodes = direct.grid
        gap = float(np.max(np.abs(proj(nodes)[:, :2] - direct.positions)))
        vr = verify_complex_solution(direct, H, b.get("tol", 1e-5))
        tol = b.get("tol", 1e-5)
        checks["lift_matches_direct"] = gap <= tol
        checks["verify_complex_solution"] = vr.passed
        report.update(max_gap=gap, **{f"verify_{k}": v for k, v in vr.as_dict().items()})
        lift_csv(ctx.path("lift.csv"), lifted)
        base_csv(ctx.path("base.csv"), direct)
    elif not expect:
        raise NumericalFailure(f"complex integration stopped early ({direct.status}/{lifted.status})")
    else:
        report["trajectory_status"] = direct.status
    if "blowup_horizon" in b:
        blow = detect_blowup(H, z0, zd0, b["blowup_horizon"], ctx.integrator)
        report["blowup"] = blow.as_dict()
        if blow.blown_up and not expect:
            raise NumericalFailure(f"unexpected blow-up near t in {blow.t_bracket}")
        checks["blowup_as_expected"] = blow.blown_up == expect
    return checks, report


def _cmd_sqrtlift(ctx: _Context):
    V, b = _potential(ctx.cfg), ctx.block
    x0 = _check_dimension(V, b["x0"], "x0")
    xd0 = _check_dimension(V, b["xdot0"], "xdot0")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", C0Warning)
        rep = verify_sqrt_lift(V, x0, xd0, b.get("c0", 1.0), b.get("c1", 0.0), b.get("horizon", 5.0), b.get("tol", 1e-6), ctx.integrator)
    _require_completed(rep.geodesic, "dual-metric integration")
    _require_completed(rep.direct, "direct integration")
    lift_csv(ctx.path("geodesic.csv"), rep.geodesic)
    base_csv(ctx.path("base.csv"), rep.direct)
    series_csv(ctx.path("energy.csv"), ("s", "coe"), rep.geodesic.grid, _coe_series(rep.geodesic))
    flagged = any(issubclass(w.category, C0Warning) for w in caught)
    return {"verify_sqrt_lift": rep.passed}, {**rep.as_dict(), "c0_warning": flagged}


def _coe_series(tr) -> np.ndarray:
    D = tr.m
    xd = tr.states[:, D + 2:]
    return 0.5 * np.sum(xd * xd, axis=1) + 0.25 * tr.states[:, D + 1] ** 2


def _cmd_shoot(ctx: _Context):
    V, b = _potential(ctx.cfg), ctx.block
    x0 = _check_dimension(V, b["x0"], "x0")
    x1 = _check_dimension(V, b["x1"], "x1")
    opts = {k: b[k] for k in ("bvp_tol", "margin_min", "n_perturb", "perturb_scale", "collect_alternates") if k in b}
    cfg = ShootingConfig(seed=ctx.seed, **opts)
    res = shoot_two_point(V, x0, x1, b["v1"], cfg)
    coe = coe_check(res)
    shooting_csv(ctx.path("shooting.csv"), res)
    series_csv(ctx.path("tau.csv"), ("t", "tau"), res.tau_grid, res.tau)
    xd = res.x_curve.velocities
    series_csv(ctx.path("energy.csv"), ("t", "coe"), res.x_curve.grid, 0.5 * np.sum(xd * xd, axis=1) + 0.25 * res.taudot**2)
    checks = {
        "terminal_gap": res.terminal_gap <= cfg.bvp_tol,
        "tv_residual": res.tv_residual <= 1e-5,
        "coe_check": coe["drift"] <= 1e-7,
    }
    if res.v2_gap is not None:
        checks["squared_potential_oracle"] = res.v2_gap <= 1e-5
    return checks, {**res.as_dict(samples=False), "coe_drift_check": coe["drift"]}


_COMMANDS = {
    "integrate": _cmd_integrate,
    "lift": _cmd_lift,
    "conformal": _cmd_conformal,
    "conjugate": _cmd_conjugate,
    "complex": _cmd_complex,
    "sqrtlift": _cmd_sqrtlift,
    "shoot": _cmd_shoot,
}


def _scalars(report: dict) -> dict:
    """Top-level numeric and boolean entries of a report, for the manifest summary."""
    out = {}
    for k, v in report.items():
        if isinstance(v, (bool, int, float, np.floating, np.integer)) and not isinstance(v, str):
            out[k] = v
    return out


def _listing(out: Path) -> list[str]:
    names = {p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file()}
    names.add(MANIFEST)
    return sorted(names)


def _write_manifest(out: Path, manifest: dict) -> None:
    manifest["files"] = _listing(out)
    write_json(out / MANIFEST, manifest)


def run_config(cfg: dict, out_dir=None, seed: int | None = None) -> RunResult:
    """Execute one validated config; never raises for config or numerical problems."""
    start = time.perf_counter()
    cfg = dict(cfg)
    if seed is not None:
        cfg["seed"] = seed
    output = cfg.get("output", {})
    out = Path(out_dir if out_dir is not None else output.get("dir", DEFAULT_OUT))
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"version": __version__, "command": cfg.get("command"), "config": cfg, "checks": {}}
    code, message = EXIT_OK, ""
    try:
        errors = validate_config(cfg)
        if errors:
            raise ConfigError("invalid config:\n  " + "\n  ".join(errors))
        ctx = _Context(cfg, out, output.get("prefix", ""), _integrator(cfg), int(cfg.get("seed", 0)))
        checks, report = _COMMANDS[cfg["command"]](ctx)
        checks = {k: bool(v) for k, v in checks.items()}
        manifest["checks"] = checks
        manifest["metrics"] = _scalars(report)
        write_json(ctx.path("report.json"), {"command": cfg["command"], "checks": checks, "report": report})
        if not all(checks.values()):
            code, message = EXIT_CHECK, "failed checks: " + ", ".join(k for k, v in checks.items() if not v)
    except (NumericalFailure, ShootingError, IntegrationError, PotentialEvaluationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        code, message = EXIT_NUMERIC, str(exc)
    except (ConfigError, MarginError, PotentialError, NotLightlikeError, DegenerateLiftError, NotGeodesicError, ValueError) as exc:
        code, message = EXIT_CONFIG, str(exc)
    manifest.update(exit_code=code, passed=code == EXIT_OK, message=message, wall_clock_s=time.perf_counter() - start)
    _write_manifest(out, manifest)
    return RunResult(code, manifest, out, message)


def _run_entry(args) -> tuple[int, str, str]:
    cfg, out, seed = args
    r = run_config(cfg, out, seed)
    return r.exit_code, str(r.out_dir), r.message


def _combine(codes) -> int:
    codes = set(codes)
    for c in (EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK):
        if c in codes:
            return c
    return EXIT_OK


def run_path(config_path, out_dir=None, seed: int | None = None, workers: int | None = None) -> RunResult:
    """Run a config file; a list of configs becomes a sweep with one subdirectory per entry."""
    try:
        configs = load_config(config_path)
    except ConfigError as exc:
        return RunResult(EXIT_CONFIG, {"exit_code": EXIT_CONFIG, "message": str(exc)}, Path(out_dir or DEFAULT_OUT), str(exc))
    raw_is_list = isinstance(json.loads(Path(config_path).read_text()), list)
    if not raw_is_list:
        return run_config(configs[0], out_dir, seed)
    start = time.perf_counter()
    root = Path(out_dir or DEFAULT_OUT)
    root.mkdir(parents=True, exist_ok=True)
    jobs = [(c, root / f"run_{k:03d}", seed) for k, c in enumerate(configs)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_run_entry, jobs))
    code = _combine(r[0] for r in results)
    manifest = {
        "version": __version__,
        "command": "sweep",
        "runs": [{"dir": Path(d).name, "exit_code": c, "message": msg} for c, d, msg in results],
        "checks": {Path(d).name: c == EXIT_OK for c, d, _ in results},
        "exit_code": code,
        "passed": code == EXIT_OK,
        "wall_clock_s": time.perf_counter() - start,
    }
    _write_manifest(root, manifest)
    return RunResult(code, manifest, root, "")


def _suite(out_dir) -> int:
    from .acceptance import format_line, run_all

    results = run_all(echo=print)
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "acceptance.json", [r.as_dict() for r in results])
        _write_manifest(out, {
            "version": __version__,
            "command": "suite acceptance",
            "checks": {f"criterion_{r.number}": r.passed for r in results},
            "exit_code": EXIT_OK if ok else EXIT_CHECK,
            "passed": ok,
        })
    return EXIT_OK if ok else EXIT_CHECK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eisenlift", description="Eisenhart-lift experiment runner")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="action", required=True)
    r = sub.add_parser("run", help="execute a config (or a list of configs)")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--workers", type=int, default=None, help="processes for sweeps")
    v = sub.add_parser("validate", help="check a config against the schema")
    v.add_argument("config")
    s = sub.add_parser("suite", help="run a named suite")
    s.add_argument("name", choices=["acceptance"])
    s.add_argument("--out", default=None)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.action == "validate":
        try:
            configs = load_config(args.config)
        except ConfigError as exc:
            print(exc, file=sys.stderr)
            return EXIT_CONFIG
        print(f"{args.config}: valid ({len(configs)} config{'s' if len(configs) != 1 else ''})")
        return EXIT_OK
    if args.action == "suite":
        return _suite(args.out)
    res = run_path(args.config, args.out, args.seed, args.workers)
    status = "ok" if res.exit_code == EXIT_OK else f"exit {res.exit_code}"
    print(f"{status}: {res.out_dir}")
    if res.message:
        print(res.message, file=sys.stderr)
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
