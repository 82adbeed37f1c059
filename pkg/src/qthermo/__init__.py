"""Finite-dimensional system-environment thermodynamics.

Unitary joint dynamics over piecewise Hamiltonian schedules, entropy
production with general effective-temperature assignments, its exact
decompositions, lower bounds, sufficient nonnegativity conditions, and a
closed-form two-level-environment example with region maps.
"""

from .errors import (
    ConvergenceError,
    DomainError,
    InfeasibleEnergy,
    InvalidInput,
    InvalidPerturbation,
    InvalidSchedule,
    InvalidState,
    NumericalError,
    QThermoError,
    ScenarioError,
)
from .linalg import (
    BipartiteState,
    DensityMatrix,
    HermitianMatrix,
    UnitaryMatrix,
    eig_hermitian,
    matrix_function,
    partial_trace,
    tensor_product,
    trace_distance,
    unitary_step,
)
from .thermo import (
    BetaSolveConfig,
    GibbsSolver,
    GibbsSpec,
    effective_beta,
    gibbs_energy,
    gibbs_state,
    gibbs_variance,
    mutual_information,
    relative_entropy,
    von_neumann_entropy,
)
from .dynamics import (
    HamiltonianSchedule,
    Segment,
    Trajectory,
    env_energy_rate,
    evolve,
)
from .entropy_production import (
    BetaPolicy,
    ConstantBeta,
    EnergyMatching,
    EPReport,
    TabulatedBeta,
    build_report,
    clausius_entropy_production,
    entropy_production,
    entropy_production_rate,
    matched_entropy_production,
    policy_endpoints,
    policy_grid_betas,
    temperature_drift_correction,
)
from .bounds import (
    BoundReport,
    PerturbedInitial,
    SufficiencyCheck,
    binary_entropy,
    build_bound_report,
    distance_to_reference,
    entropy_gap_bound,
    is_product_state,
    make_perturbed_initial,
    product_trace_distance_bound,
    sufficient_nonneg_general,
    sufficient_nonneg_product,
    trace_distance_bound,
)
from .qubit_env import (
    EnvPoint,
    ExampleDistances,
    RegionCell,
    RegionGrid,
    RegionMap,
    beta_from_polarization,
    emit_region_map,
    env_hamiltonian,
    env_point_of,
    example_distances,
    region_condition,
    region_lhs,
    region_rhs,
    thermal_polarization,
)
from .scenario import (
    Scenario,
    ScenarioResult,
    load_region_grid,
    load_scenario,
    parse_region_grid,
    parse_scenario,
    result_to_json,
    run_scenario,
)
from .verify import CheckResult, VerifySuiteConfig, format_results, run_verify

__version__ = "0.1.0"

__all__ = [
    "BetaPolicy",
    "BetaSolveConfig",
    "BipartiteState",
    "BoundReport",
    "CheckResult",
    "ConstantBeta",
    "ConvergenceError",
    "DensityMatrix",
    "DomainError",
    "EPReport",
    "EnergyMatching",
    "EnvPoint",
    "ExampleDistances",
    "GibbsSolver",
    "GibbsSpec",
    "HamiltonianSchedule",
    "HermitianMatrix",
    "InfeasibleEnergy",
    "InvalidInput",
    "InvalidPerturbation",
    "InvalidSchedule",
    "InvalidState",
    "NumericalError",
    "PerturbedInitial",
    "QThermoError",
    "RegionCell",
    "RegionGrid",
    "RegionMap",
    "Scenario",
    "ScenarioError",
    "ScenarioResult",
    "Segment",
    "SufficiencyCheck",
    "TabulatedBeta",
    "Trajectory",
    "UnitaryMatrix",
    "VerifySuiteConfig",
    "beta_from_polarization",
    "binary_entropy",
    "build_bound_report",
    "build_report",
    "clausius_entropy_production",
    "distance_to_reference",
    "effective_beta",
    "eig_hermitian",
    "emit_region_map",
    "entropy_gap_bound",
    "entropy_production",
    "entropy_production_rate",
    "env_energy_rate",
    "env_hamiltonian",
    "env_point_of",
    "evolve",
    "example_distances",
    "format_results",
    "gibbs_energy",
    "gibbs_state",
    "gibbs_variance",
    "is_product_state",
    "load_region_grid",
    "load_scenario",
    "make_perturbed_initial",
    "matched_entropy_production",
    "matrix_function",
    "mutual_information",
    "parse_region_grid",
    "parse_scenario",
    "partial_trace",
    "policy_endpoints",
    "policy_grid_betas",
    "product_trace_distance_bound",
    "region_condition",
    "region_lhs",
    "region_rhs",
    "relative_entropy",
    "result_to_json",
    "run_scenario",
    "run_verify",
    "sufficient_nonneg_general",
    "sufficient_nonneg_product",
    "temperature_drift_correction",
    "tensor_product",
    "thermal_polarization",
    "trace_distance",
    "trace_distance_bound",
    "unitary_step",
    "von_neumann_entropy",
]
