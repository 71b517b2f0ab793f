"""Monotone policy iteration for stationary discounted HJB equations.

The package discretizes lam*V + sup_a{-c(x,a) - f(x,a).grad V} = 0 on a
uniform grid with centered differences plus an artificial viscosity term
N*h*Lap_h chosen large enough that the per-policy stencil is monotone,
then solves the discrete equation by Howard policy iteration: a
tridiagonal (1D) or SOR (2D) policy-evaluation solve alternating with a
closed-form greedy policy update, optionally relaxed.

Layer map, bottom to top: grid -> problems -> scheme -> linsolve ->
howard -> analysis / benchmarks -> cli.  oracles holds independent
reimplementations used only to cross-check the main path; backends picks
the compiled kernels when the extension is built and the pure-Python
twins otherwise.
"""

from .analysis import (
    ErrorDecomposition,
    RateFit,
    detect_plateau,
    error_metrics,
    fit_geometric_rate,
    fit_power_rate,
    optimal_iteration_count,
    total_error_bound,
)
from .backends import backend_name, compiled_available, set_backend
from .benchmarks import BENCHMARK_NAMES, BenchmarkSetup, build_benchmark
from .grid import Grid, GridField, apply_dirichlet, build_grid
from .howard import (
    PIConfig,
    PIReport,
    initial_policy,
    policy_evaluate,
    policy_improve,
    run_policy_iteration,
)
from .linsolve import (
    SolverError,
    SolveStats,
    StructuredSystem2D,
    TridiagonalSystem,
    assemble_evaluation_system,
    solve_dense_oracle,
    solve_sor,
    solve_tridiagonal,
)
from .problems import (
    ControlProblem,
    PolicyField,
    greedy_policy,
    hamiltonian,
    lq1d_problem,
    lq_reference_policy,
    lq_reference_value,
    lq_value_coefficient,
    manufactured_drift,
    manufactured_source,
    manufactured_value,
)
from .scheme import (
    MonotonicityError,
    SchemeParams,
    StencilCertificate,
    apply_policy_operator,
    bellman_residual,
    certify_monotone_stencil,
    contraction_factor,
    resolvent_map,
    viscosity_coefficient,
)

__version__ = "0.1.0"

__all__ = [
    "BENCHMARK_NAMES",
    "BenchmarkSetup",
    "ControlProblem",
    "ErrorDecomposition",
    "Grid",
    "GridField",
    "MonotonicityError",
    "PIConfig",
    "PIReport",
    "PolicyField",
    "RateFit",
    "SchemeParams",
    "SolveStats",
    "SolverError",
    "StencilCertificate",
    "StructuredSystem2D",
    "TridiagonalSystem",
    "apply_dirichlet",
    "apply_policy_operator",
    "assemble_evaluation_system",
    "backend_name",
    "bellman_residual",
    "build_benchmark",
    "build_grid",
    "certify_monotone_stencil",
    "compiled_available",
    "contraction_factor",
    "detect_plateau",
    "error_metrics",
    "fit_geometric_rate",
    "fit_power_rate",
    "greedy_policy",
    "hamiltonian",
    "initial_policy",
    "lq1d_problem",
    "lq_reference_policy",
    "lq_reference_value",
    "lq_value_coefficient",
    "manufactured_drift",
    "manufactured_source",
    "manufactured_value",
    "optimal_iteration_count",
    "policy_evaluate",
    "policy_improve",
    "resolvent_map",
    "run_policy_iteration",
    "set_backend",
    "solve_dense_oracle",
    "solve_sor",
    "solve_tridiagonal",
    "total_error_bound",
    "viscosity_coefficient",
    "__version__",
]
