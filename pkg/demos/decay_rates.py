"""Slow algebraic approach to stationarity versus exponential decay.

For beta < 1 the distance to the stationary state falls like t^-beta; at
beta = 1 it falls exponentially.
"""

import numpy as np

from frond import path_graph, solve_linear_oracle, stationary_distribution
from frond.analysis import distance_to_stationary, fit_algebraic_slope, fit_exponential_rate

g = path_graph(3)
X0 = np.eye(3)[:, [0]]
pi = stationary_distribution(g)
t = np.geomspace(10, 1000, 60)
for beta in (0.3, 0.5, 0.8):
    d = distance_to_stationary(solve_linear_oracle(g, X0, beta, t), pi, X0)
    print(f"beta = {beta}: fitted log-log slope {fit_algebraic_slope(t, d).slope:+.3f}")

t1 = np.linspace(0.5, 5, 60)
d1 = distance_to_stationary(solve_linear_oracle(g, X0, 1.0, t1), pi, X0)
print(f"beta = 1: R^2 power law {fit_algebraic_slope(t1, d1, 0.5, 5).r_squared:.4f}, "
      f"exponential {fit_exponential_rate(t1, d1, 0.5, 5).r_squared:.4f}")
