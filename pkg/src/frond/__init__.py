"""Fractional-order dynamics on graphs.

Caputo fractional differential equations driving node features, the
non-Markovian random walk whose marginals solve fractional diffusion, and
the exact oracles used to check both.
"""

from .analysis import (
    SlopeFit,
    distance_to_stationary,
    fit_algebraic_slope,
    fit_exponential_rate,
    solver_error_report,
)
from .dynamics import AttentionConfig, DynamicsSpec, GraphConParams, build_rhs
from .fdesolve import (
    SolverConfig,
    SolverDivergence,
    Trajectory,
    solve,
    solve_implicit_l1,
    solve_linear_oracle,
    solve_predictor,
    solve_predictor_corrector,
    solve_short_memory,
)
from .fraccalc import caputo_l1, memory_coefficients, mittag_leffler
from .graphcore import (
    Graph,
    GraphError,
    check_connectivity,
    complete_graph,
    load_graph,
    path_graph,
    random_graph,
    random_walk_laplacian,
    stationary_distribution,
)
from .walk import (
    WalkConfig,
    evolve_distribution_exact,
    simulate_ensemble,
    step_walker,
    walk_vs_fde,
)

__version__ = "0.1.0"
