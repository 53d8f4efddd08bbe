"""Fractional diffusion on a two-node graph, compared with the closed form.

Every solver is run at the same step size and its largest deviation from
the eigen-decomposition solution is printed.
"""

import numpy as np

from frond import DynamicsSpec, SolverConfig, complete_graph, solve, solve_linear_oracle

g = complete_graph(2)
X0 = np.array([[1.0], [0.0]])
spec = DynamicsSpec("grand_l")

for method, extra in (("predictor", {}), ("predictor_corrector", {}),
                      ("predictor", {"memory_window": 20}), ("implicit_l1", {})):
    cfg = SolverConfig(0.5, 1e-3, 1.0, method, **extra)
    tr = solve(spec, g, X0, cfg)
    ref = solve_linear_oracle(g, X0, 0.5, tr.times)
    label = method + (f" (window {extra['memory_window']})" if extra else "")
    print(f"{label:<28s} max error {np.abs(tr.states - ref.states).max():.2e}")
