"""A non-Markovian random walk and its exact marginals.

Walkers on a five-node graph jump back to earlier positions with the memory
weights.  The Monte-Carlo occupation is compared with the exact recursion.
"""

import numpy as np

from frond import Graph
from frond.walk import WalkConfig, evolve_distribution_exact, simulate_ensemble, total_variation

g = Graph.from_edges(5, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 4, 1.5),
                         (4, 0, 1.0), (1, 3, 0.5)])
cfg = WalkConfig(beta=0.5, sigma=0.05, n_steps=50, n_walkers=100_000, start=0, seed=1)
ens = simulate_ensemble(g, cfg)
exact = evolve_distribution_exact(g, np.eye(5)[0], cfg)
print("node  simulated  exact")
for i in range(5):
    print(f"{i:<5d} {ens.occupation[-1, i]:.4f}     {exact[-1, i]:.4f}")
print(f"total variation at step 50: {total_variation(ens.occupation[-1], exact[-1]):.4f}")
