"""Eisenhart lifts of Hamiltonian systems to pp-wave geodesics, with conformal,
complex and Riemannian variants and conjugate-point diagnostics."""

__version__ = "0.1.0"

from .complexlift import (
    HolomorphicSystem,
    SplitMetric,
    complex_lift_initial,
    detect_blowup,
    f_from_potential,
    solve_complex,
    verify_complex_solution,
)
from .conformal import ConformalMetric, conformal_factor, reparametrize, verify_conformal_class
from .lift import (
    BrinkmannMetric,
    LiftState,
    Trajectory,
    eisenhart_lift_initial,
    integrate_lift,
    project,
    solve_hamiltonian,
    verify_lift,
)
from .odeint import IntegratorConfig, integrate
from .potentials import CATALOG_NAMES, PotentialSpec, catalog_get, from_function
from .riemlift import RiemannianDualMetric, ShootingConfig, coe_check, shoot_two_point, verify_sqrt_lift
from .stability import (
    check_accumulation_hypotheses,
    check_focusing_bound,
    conjugate_points,
    generic_conjugate_points,
    variation_family,
)

__all__ = [
    "__version__",
    "BrinkmannMetric",
    "CATALOG_NAMES",
    "ConformalMetric",
    "HolomorphicSystem",
    "IntegratorConfig",
    "LiftState",
    "PotentialSpec",
    "RiemannianDualMetric",
    "ShootingConfig",
    "SplitMetric",
    "Trajectory",
    "catalog_get",
    "check_accumulation_hypotheses",
    "check_focusing_bound",
    "coe_check",
    "complex_lift_initial",
    "conformal_factor",
    "conjugate_points",
    "detect_blowup",
    "eisenhart_lift_initial",
    "f_from_potential",
    "from_function",
    "generic_conjugate_points",
    "integrate",
    "integrate_lift",
    "project",
    "reparametrize",
    "shoot_two_point",
    "solve_complex",
    "solve_hamiltonian",
    "variation_family",
    "verify_complex_solution",
    "verify_conformal_class",
    "verify_lift",
    "verify_sqrt_lift",
]
