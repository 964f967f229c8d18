"""Brownian mass transport between one-dimensional measures.

A deterministic freeze/diffuse engine computes bounded Brownian transports
on a lattice; a pipeline assembles from it a non-constant function phi with
X + phi(X) * Y Gaussian for independent standard Gaussians X, Y; Monte-Carlo
and analytic checks verify the construction.
"""

from .errors import (
    ConsistencyError,
    NonTerminationError,
    NumericToleranceError,
    PreconditionError,
)
from .lattice import LatticeMeasure, discretize, phi_lattice
from .measures import (
    CantorSet,
    CostFunction,
    DensityMeasure,
    FeasibilityReport,
    GapConstants,
    Quadrature,
    build_cantor,
    cantor_gap_constants,
    cost,
    feasibility_check,
    from_density,
    from_pieces,
    gamma_center,
    gaussian,
    triangle,
    truncate_normalize,
    uniform,
)
from .montecarlo import (
    EmpiricalMeasure,
    PathSimConfig,
    expected_time_check,
    hermite_check,
    ks_distance,
    ks_distance_lattice,
    levy_distance,
    simulate_counterexample,
    simulate_counterexample_paths,
    simulate_first_intersection,
)
from .pipeline import (
    AsymptoticsReport,
    CantelliConfig,
    CantelliResult,
    build_problem,
    crossing_radius,
    f1_asymptotics_report,
    run_pipeline,
)
from .solver import (
    PiecewiseLinear,
    SolverState,
    TransportSolution,
    component_collapse_diagnostic,
    extend_f,
    init_state,
    solve,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticsReport",
    "CantelliConfig",
    "CantelliResult",
    "CantorSet",
    "ConsistencyError",
    "CostFunction",
    "DensityMeasure",
    "EmpiricalMeasure",
    "FeasibilityReport",
    "GapConstants",
    "LatticeMeasure",
    "NonTerminationError",
    "NumericToleranceError",
    "PathSimConfig",
    "PiecewiseLinear",
    "PreconditionError",
    "Quadrature",
    "SolverState",
    "TransportSolution",
    "build_cantor",
    "build_problem",
    "cantor_gap_constants",
    "component_collapse_diagnostic",
    "cost",
    "crossing_radius",
    "discretize",
    "expected_time_check",
    "extend_f",
    "f1_asymptotics_report",
    "feasibility_check",
    "from_density",
    "from_pieces",
    "gamma_center",
    "gaussian",
    "hermite_check",
    "init_state",
    "ks_distance",
    "ks_distance_lattice",
    "levy_distance",
    "phi_lattice",
    "run_pipeline",
    "simulate_counterexample",
    "simulate_counterexample_paths",
    "simulate_first_intersection",
    "solve",
    "step",
    "triangle",
    "truncate_normalize",
    "uniform",
]
