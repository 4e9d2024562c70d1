"""Block-sparse signal recovery with latent optimal partitioning.

Convex and nonconvex latent-partition penalties with ADMM solvers, a
proximal-operator catalog, and a benchmark harness for compressive-sensing
and current-trace denoising experiments.
"""

__version__ = "0.1.0"

from ._backend import backend_name
from .admm import (AdmmConfig, AdmmState, Problem, SolveResult, SolverAbort,
                   augmented_lagrangian, solve)
from .experiments import (MethodSpec, NanoporeConfig, SyntheticCsConfig,
                          TrialReport, gen_cs_instance, gen_nanopore_instance,
                          metric_f1, metric_nmse, metric_snr, run_trials)
from .linops import (DenseMap, FirstDifferenceMap, IdentityMap, LinearMap,
                     ScaledMap, solve_cg, solve_tridiag_sigma)
from .penalties import (GridConfig, PenaltySpec, block_penalty_theta,
                        emcp_optimal_weight, log_sum, mcp,
                        penalty_bruteforce, penalty_closed_form, var_l2,
                        var_log, var_mcp)
from .prox import (AbsoluteError, ShiftedIDiv, SquaredError, bisect_xi,
                   bisect_xi_vec, project_l1_ball, prox_elastic_net,
                   prox_fidelity, prox_perspective, prox_perspective_vec)

__all__ = [
    "__version__",
    "backend_name",
    "AdmmConfig", "AdmmState", "Problem", "SolveResult", "SolverAbort",
    "augmented_lagrangian", "solve",
    "MethodSpec", "NanoporeConfig", "SyntheticCsConfig", "TrialReport",
    "gen_cs_instance", "gen_nanopore_instance",
    "metric_f1", "metric_nmse", "metric_snr", "run_trials",
    "DenseMap", "FirstDifferenceMap", "IdentityMap", "LinearMap", "ScaledMap",
    "solve_cg", "solve_tridiag_sigma",
    "GridConfig", "PenaltySpec", "block_penalty_theta", "emcp_optimal_weight",
    "log_sum", "mcp", "penalty_bruteforce", "penalty_closed_form",
    "var_l2", "var_log", "var_mcp",
    "AbsoluteError", "ShiftedIDiv", "SquaredError", "bisect_xi",
    "bisect_xi_vec", "project_l1_ball", "prox_elastic_net", "prox_fidelity",
    "prox_perspective", "prox_perspective_vec",
]
