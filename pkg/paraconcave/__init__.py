__version__ = "0.1.0"

from .concavity import (
    ConcavityQuery,
    ConcavityReport,
    Verdict,
    check_parabolic_concavity,
    check_spatial_concavity,
    check_structure_condition,
    estimate_max_exponent,
    full_envelope,
    lambda_envelope,
    property_suite,
)
from .domain import ConvexDomain, SpaceGrid, boundary_distance, build_grid, contains
from .energy import EnergyCurve, check_curve_concavity, check_time_reparametrized, energy_concavity_exponent, heat_energy
from .errors import ParaconcaveError
from .exponents import (
    TheoremInputs,
    elliptic_exponent,
    energy_exponent,
    predict,
    semilinear_exponents,
    sharpness_threshold,
    solution_exponent,
    structure_beta,
)
from .fields import SpaceTimeField, SteadyField
from .means import WeightVector, p_mean, power_mean
from .scenario import ScenarioConfig, run_scenario, run_suite
from .solver import (
    boundary_scaling_exponent,
    solve_parabolic,
    solve_semilinear_maximal,
    solve_steady,
    time_monotonicity_check,
)
from .sources import SourceSpec

__all__ = [
    "__version__",
    "ParaconcaveError",
    "WeightVector",
    "power_mean",
    "p_mean",
    "ConvexDomain",
    "SpaceGrid",
    "build_grid",
    "contains",
    "boundary_distance",
    "SourceSpec",
    "SpaceTimeField",
    "SteadyField",
    "solve_parabolic",
    "solve_semilinear_maximal",
    "solve_steady",
    "time_monotonicity_check",
    "boundary_scaling_exponent",
    "ConcavityQuery",
    "ConcavityReport",
    "Verdict",
    "check_parabolic_concavity",
    "check_spatial_concavity",
    "check_structure_condition",
    "estimate_max_exponent",
    "full_envelope",
    "lambda_envelope",
    "property_suite",
    "EnergyCurve",
    "heat_energy",
    "energy_concavity_exponent",
    "check_curve_concavity",
    "check_time_reparametrized",
    "TheoremInputs",
    "solution_exponent",
    "energy_exponent",
    "semilinear_exponents",
    "sharpness_threshold",
    "structure_beta",
    "elliptic_exponent",
    "predict",
    "ScenarioConfig",
    "run_scenario",
    "run_suite",
]
