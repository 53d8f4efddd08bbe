"""Non-Markovian graph random walk whose marginals solve the fractional diffusion.

At step ``n`` a walker with path ``(j_0, ..., j_n)`` draws ``rho ~ U[0, 1)``
and locates it in consecutive intervals::

    [ c_1 - s | s | c_2 | c_3 | ... | c_n | b_n ]       s = sigma^beta
      stay     jump  j_{n-1} j_{n-2}    j_1   j_0

Inside the jump interval the relative position picks a neighbor ``k`` of
``j_n`` with probability ``W_{j_n k} / d_{j_n}``.  At ``n = 0`` the empty
revisit block leaves a tail of length ``1 - c_1`` that lands on ``j_0``, i.e.
it merges with "stay".  Revisits refer to path positions, so a node that
appears twice in the history is hit through both intervals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .fraccalc import MemoryCoefficients, _check_beta, memory_coefficients
from .graphcore import Graph, stationary_distribution

BLOCK = 4096  # walkers per RNG stream


@dataclass(frozen=True)
class WalkConfig:
    beta: float
    sigma: float
    n_steps: int
    n_walkers: int = 1000
    start: Union[int, np.ndarray] = 0
    seed: int = 0
    record_every: int = 1
    keep_paths: bool = False

    def __post_init__(self):
        _check_beta(self.beta)
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.sigma ** self.beta < self.beta:
            raise ValueError(
                f"sigma^beta = {self.sigma ** self.beta:.4g} must be < c_1 = beta = {self.beta}"
            )
        if self.n_steps < 1 or self.n_walkers < 1 or self.record_every < 1:
            raise ValueError("n_steps, n_walkers and record_every must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def jump_mass(self) -> float:
        return self.sigma ** self.beta


@dataclass
class WalkEnsemble:
    """Empirical occupation distributions at ``steps``; ``occupation[i]`` is
    the node histogram at ``steps[i]`` divided by the number of walkers."""

    steps: np.ndarray
    times: np.ndarray
    occupation: np.ndarray
    n_walkers: int
    paths: Optional[np.ndarray] = field(default=None, repr=False)


def partition_lengths(coeffs: MemoryCoefficients, n: int, jump_mass: float) -> np.ndarray:
    """Interval lengths ``[c_1 - s, s, c_2, ..., c_n, tail]`` used at step ``n``."""
    c1 = coeffs.c[0]
    tail = 1.0 - c1 if n == 0 else coeffs.b[n]
    return np.concatenate([[c1 - jump_mass, jump_mass], coeffs.c[1:n], [tail]])


def step_walker(history, coeffs: MemoryCoefficients, g: Graph, sigma: float, rng_draw: float) -> int:
    """Next node for a single walker given its full path and a uniform draw."""
    history = list(history)
    if not history:
        raise ValueError("history must contain at least the start node")
    if not 0.0 <= rng_draw < 1.0:
        raise ValueError("rng_draw must lie in [0, 1)")
    n = len(history) - 1
    if coeffs.n < max(n, 1):
        raise ValueError(f"coefficients cover {coeffs.n} steps, need {n}")
    s = sigma ** coeffs.beta
    c1 = coeffs.c[0]
    if not s < c1:
        raise ValueError("sigma^beta must be smaller than c_1")
    cur = history[-1]
    if rng_draw < c1 - s:
        return cur
    if rng_draw < c1:
        nbrs, cdf = _neighbor_cdf(g, cur)
        u = (rng_draw - (c1 - s)) / s
        return int(nbrs[min(int(np.searchsorted(cdf, u, side="right")), len(nbrs) - 1)])
    if n == 0:
        return cur
    pos = _revisit_position(coeffs, n, np.array([rng_draw]))[0]
    return history[pos]


def _neighbor_cdf(g: Graph, node: int) -> tuple[np.ndarray, np.ndarray]:
    a, b = g.weights.indptr[node], g.weights.indptr[node + 1]
    cdf = np.cumsum(g.weights.data[a:b]) / g.degree[node]
    cdf[-1] = 1.0
    return g.weights.indices[a:b], cdf


def _revisit_position(coeffs: MemoryCoefficients, n: int, rho: np.ndarray) -> np.ndarray:
    """Path index hit by draws ``rho >= c_1`` at step ``n >= 1``.

    Interval ``c_m`` (``m = 2..n``) maps to position ``n + 1 - m``; the
    trailing ``b_n`` interval (and any rounding overshoot) maps to 0.
    """
    rest = np.concatenate([coeffs.c[1:n], [coeffs.b[n]]])
    edges = coeffs.c[0] + np.cumsum(rest)
    m = np.searchsorted(edges, rho, side="right") + 2
    return np.where(m <= n, n + 1 - m, 0)


def _uniforms(seed: int, n_walkers: int, n_draws: int) -> np.ndarray:
    """Uniforms for walkers ``0..n_walkers-1``; walker ``w`` reads row
    ``w % BLOCK`` of a Philox stream keyed by ``(seed, w // BLOCK)``, so its
    draws do not depend on how many other walkers are simulated."""
    out = np.empty((n_walkers, n_draws))
    for blk in range(0, -(-n_walkers // BLOCK)):
        lo, hi = blk * BLOCK, min((blk + 1) * BLOCK, n_walkers)
        bitgen = np.random.Philox(key=int(seed) + (blk << 64))
        out[lo:hi] = np.random.Generator(bitgen).random((BLOCK, n_draws))[: hi - lo]
    return out


def _start_nodes(g: Graph, start, draws: np.ndarray) -> np.ndarray:
    if np.ndim(start) == 0:
        node = int(start)
        if not 0 <= node < g.n_nodes:
            raise ValueError(f"start node {node} outside graph")
        return np.full(draws.shape, node, dtype=np.int64)
    p0 = _check_distribution(start, g.n_nodes)
    cdf = np.cumsum(p0)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, draws, side="right").astype(np.int64)


def simulate_ensemble(g: Graph, cfg: WalkConfig) -> WalkEnsemble:
    """Monte-Carlo simulation of ``cfg.n_walkers`` independent paths.

    Vectorized across walkers: at each step every walker sees the same
    interval partition, so one ``searchsorted`` classifies all draws.
    """
    M, n_steps, N = cfg.n_walkers, cfg.n_steps, g.n_nodes
    coeffs = memory_coefficients(cfg.beta, n_steps)
    s = cfg.jump_mass
    c1 = coeffs.c[0]
    draws = _uniforms(cfg.seed, M, n_steps + 1)

    cdfs = [_neighbor_cdf(g, j) for j in range(N)]

    paths = np.empty((M, n_steps + 1), dtype=np.int64)
    paths[:, 0] = _start_nodes(g, cfg.start, draws[:, 0])
    rec_steps = list(range(0, n_steps + 1, cfg.record_every))
    if rec_steps[-1] != n_steps:
        rec_steps.append(n_steps)
    occupation = np.empty((len(rec_steps), N))
    slot = {k: i for i, k in enumerate(rec_steps)}
    occupation[0] = np.bincount(paths[:, 0], minlength=N) / M

    rows = np.arange(M)
    for n in range(n_steps):
        rho = draws[:, n + 1]
        cur = paths[:, n]
        nxt = cur.copy()

        jump = (rho >= c1 - s) & (rho < c1)
        if jump.any():
            u = (rho - (c1 - s)) / s
            for node in np.unique(cur[jump]):
                sel = jump & (cur == node)
                nbrs, cdf = cdfs[node]
                idx = np.minimum(np.searchsorted(cdf, u[sel], side="right"), len(nbrs) - 1)
                nxt[sel] = nbrs[idx]

        if n > 0:
            back = rho >= c1
            if back.any():
                nxt[back] = paths[rows[back], _revisit_position(coeffs, n, rho[back])]

        paths[:, n + 1] = nxt
        if n + 1 in slot:
            occupation[slot[n + 1]] = np.bincount(nxt, minlength=N) / M

    steps = np.array(rec_steps)
    return WalkEnsemble(steps, steps * cfg.sigma, occupation, M,
                        paths if cfg.keep_paths else None)


def _check_distribution(p, n: int) -> np.ndarray:
    p = np.asarray(p, dtype=float).ravel()
    if p.shape != (n,):
        raise ValueError(f"distribution must have length {n}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("p0 must be a probability vector")
    return p


def evolve_distribution_exact(g: Graph, p0, cfg: WalkConfig) -> np.ndarray:
    """Marginal law of the walk, steps ``0..cfg.n_steps``.

    ``P_{n+1} = tail_n P_0 + sum_{k=2}^n c_k P_{n+1-k} + (c_1 - s) P_n + s W D^-1 P_n``
    with ``tail_0 = 1 - c_1`` and ``tail_n = b_n`` otherwise.
    """
    p0 = _check_distribution(p0, g.n_nodes)
    n_steps = cfg.n_steps
    coeffs = memory_coefficients(cfg.beta, n_steps)
    s = cfg.jump_mass
    T = g.transition_matrix()
    P = np.empty((n_steps + 1, g.n_nodes))
    P[0] = p0
    c = coeffs.c
    for n in range(n_steps):
        tail = 1.0 - c[0] if n == 0 else coeffs.b[n]
        nxt = tail * P[0] + (c[0] - s) * P[n] + s * (T @ P[n])
        if n >= 1:
            # c_k P_{n+1-k} for k = 2..n, i.e. rows n-1 down to 1
            nxt = nxt + c[1:n] @ P[n - 1:0:-1]
        P[n + 1] = nxt
    return P


@dataclass
class WalkFdeReport:
    times: np.ndarray
    abs_diff: np.ndarray  # sup-norm over nodes at each time
    max_abs: float
    mean_abs: float


def walk_vs_fde(g: Graph, p0, beta: float, sigma: float, n_steps: int, solver_cfg=None) -> WalkFdeReport:
    """Compare the exact walk marginals with a solution of ``D^beta P = -L P``.

    ``solver_cfg=None`` uses the eigen-solution; otherwise a
    :class:`~frond.fdesolve.SolverConfig` whose grid must contain every
    ``t_n = n sigma``.
    """
    from .dynamics import DynamicsSpec
    from .fdesolve import solve, solve_linear_oracle

    cfg = WalkConfig(beta, sigma, n_steps)
    if solver_cfg is not None and solver_cfg.beta != cfg.beta:
        raise ValueError("solver beta differs from the walk beta")
    P = evolve_distribution_exact(g, p0, cfg)
    times = np.arange(n_steps + 1) * sigma
    p0col = np.asarray(p0, dtype=float)[:, None]
    if solver_cfg is None:
        ref = solve_linear_oracle(g, p0col, beta, times).states[:, :, 0]
    else:
        if abs(solver_cfg.t_final - n_steps * sigma) > 1e-9 * max(1.0, solver_cfg.t_final):
            raise ValueError("solver horizon must equal n_steps * sigma")
        ratio = sigma / (solver_cfg.h * solver_cfg.record_every)
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("walk grid is not aligned with the solver's recorded grid")
        traj = solve(DynamicsSpec("grand_l"), g, p0col, solver_cfg)
        stride = int(round(ratio))
        ref = traj.states[::stride, :, 0]
        if ref.shape[0] != n_steps + 1:
            raise ValueError("walk grid is not aligned with the solver's recorded grid")
    diff = np.abs(P - ref).max(axis=1)
    return WalkFdeReport(times, diff, float(diff.max()), float(diff.mean()))


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def markov_reference_walk(g: Graph, start: int, sigma: float, n_steps: int,
                          n_walkers: int, seed: int) -> np.ndarray:
    """Plain lazy Markov chain simulator (stay ``1 - sigma``, else jump by
    ``W D^-1``) returning the occupation at the final step."""
    rng = np.random.default_rng(seed)
    T = g.transition_matrix().toarray()
    pos = np.full(n_walkers, start)
    for _ in range(n_steps):
        move = rng.random(n_walkers) < sigma
        cur = pos.copy()
        for node in np.unique(cur[move]):
            sel = move & (cur == node)
            pos[sel] = rng.choice(g.n_nodes, size=int(sel.sum()), p=T[:, node])
    return np.bincount(pos, minlength=g.n_nodes) / n_walkers


def stationary_start(g: Graph) -> np.ndarray:
    return stationary_distribution(g)
