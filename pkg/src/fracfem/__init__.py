"""P1 finite elements for the integral fractional Laplacian.

Solves (-Delta)^s u = f on a ball with Dirichlet data prescribed on the
whole complement, either by strong imposition on exterior nodes (direct)
or with a Lagrange multiplier approximating the nonlocal flux (mixed).
The exterior condition is truncated to an auxiliary ball whose width grows
as meshes refine; ``harness`` bundles the convergence experiments and the
command-line interface.
"""

from .assembly import AssembledSystem, assemble_system, quadrature_drift
from .core import BACKEND
from .geometry import (Mesh, NodeClass, TruncationRule, mesh_disc,
                       mesh_interval, read_mesh, truncation_width, write_mesh)
from .harness import (EXPERIMENTS, ExperimentConfig, cli_main,
                      experiment_config, run_domain_growth, run_experiment)
from .kernel import kernel, normalization_constant, tail_weight_outside_ball
from .metrics import (ConvergenceReport, EnergyError, MetricsError, eoc_fit,
                      hs_energy_error_homogeneous, hs_error_smooth_bound,
                      l2_error)
from .reference import (DATUM_GAUSS, DATUM_ONE, DATUM_POW4, QuadratureError,
                        RadialDatum, ReferenceSolution, getoor_solution,
                        poisson_kernel)
from .solve import (DiscreteSolution, SolverError, evaluate_solution,
                    solve_direct, solve_mixed, write_solution_csv)

__version__ = "0.1.0"

__all__ = [
    "AssembledSystem", "assemble_system", "quadrature_drift", "BACKEND",
    "Mesh", "NodeClass", "TruncationRule", "mesh_disc", "mesh_interval",
    "read_mesh", "truncation_width", "write_mesh",
    "EXPERIMENTS", "ExperimentConfig", "cli_main", "experiment_config",
    "run_domain_growth", "run_experiment",
    "kernel", "normalization_constant", "tail_weight_outside_ball",
    "ConvergenceReport", "EnergyError", "MetricsError", "eoc_fit",
    "hs_energy_error_homogeneous", "hs_error_smooth_bound", "l2_error",
    "DATUM_GAUSS", "DATUM_ONE", "DATUM_POW4", "QuadratureError",
    "RadialDatum", "ReferenceSolution", "getoor_solution", "poisson_kernel",
    "DiscreteSolution", "SolverError", "evaluate_solution", "solve_direct",
    "solve_mixed", "write_solution_csv",
    "__version__",
]
