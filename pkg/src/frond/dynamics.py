"""Right-hand sides ``F(W, X)`` for ``D_t^beta X = F(W, X)``.

All operators take and return dense ``(N, d)`` arrays.  Attention matrices
are sparse, supported on the graph edges, and normalized per column so that
``1^T A = 1^T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import sparse

from .graphcore import Graph, Laplacian, random_walk_laplacian

KINDS = ("grand_l", "grand_nl", "grand_pp", "graphcon")

Rhs = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class AttentionConfig:
    """Dot-product attention ``s_ij = (W_K x_i) . (W_Q x_j) / d_bar``.

    ``w_k`` and ``w_q`` have shape ``(d_k, d)``.  With ``time_variant=False``
    the attention is evaluated once on the initial state and reused.
    """

    w_k: np.ndarray
    w_q: np.ndarray
    d_bar: float = 1.0
    time_variant: bool = True

    def __post_init__(self):
        wk = np.atleast_2d(np.asarray(self.w_k, dtype=float))
        wq = np.atleast_2d(np.asarray(self.w_q, dtype=float))
        if wk.shape != wq.shape:
            raise ValueError(f"w_k {wk.shape} and w_q {wq.shape} must have equal shapes")
        if not self.d_bar > 0:
            raise ValueError("d_bar must be positive")
        object.__setattr__(self, "w_k", wk)
        object.__setattr__(self, "w_q", wq)

    @classmethod
    def random(cls, d: int, d_k: Optional[int] = None, seed: int = 0, **kw) -> "AttentionConfig":
        """Seeded Gaussian weights scaled by ``1/sqrt(d)``; never trained."""
        d_k = d if d_k is None else d_k
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(d)
        kw.setdefault("d_bar", float(np.sqrt(d_k)))
        return cls(rng.normal(scale=scale, size=(d_k, d)),
                   rng.normal(scale=scale, size=(d_k, d)), **kw)


@dataclass(frozen=True)
class GraphConParams:
    gamma: float = 1.0
    alpha: float = 1.0
    activation: str = "tanh"
    theta: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.gamma < 0 or self.alpha < 0:
            raise ValueError("gamma and alpha must be nonnegative")
        if self.activation not in ("tanh", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class DynamicsSpec:
    """Which right-hand side to use, plus its parameters.

    ``grand_pp`` adds a constant ``source`` matrix to a ``base`` operator
    (``"grand_l"`` or ``"grand_nl"``); ``source_nodes`` lists the rows the
    source may be supported on.
    """

    kind: str
    attention: Optional[AttentionConfig] = None
    source: Optional[np.ndarray] = None
    source_nodes: Optional[tuple[int, ...]] = None
    base: str = "grand_l"
    graphcon: Optional[GraphConParams] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown dynamics kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "grand_nl" and self.attention is None:
            raise ValueError("grand_nl requires an attention config")
        if self.kind == "grand_pp":
            if self.source is None:
                raise ValueError("grand_pp requires a source matrix")
            if self.base not in ("grand_l", "grand_nl"):
                raise ValueError("grand_pp base must be grand_l or grand_nl")
            if self.base == "grand_nl" and self.attention is None:
                raise ValueError("grand_pp over grand_nl requires an attention config")
        if self.kind == "graphcon" and self.graphcon is None:
            object.__setattr__(self, "graphcon", GraphConParams())


def _as_state(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"state must be an (N, d) matrix, got shape {X.shape}")
    return X


def eval_grand_l(L: Laplacian, X) -> np.ndarray:
    """``-L X``."""
    X = _as_state(X)
    if X.shape[0] != L.shape[0]:
        raise ValueError(f"state has {X.shape[0]} rows, Laplacian is {L.shape}")
    return -np.asarray(L.matrix @ X)


def attention_matrix(cfg: AttentionConfig, g: Graph, X) -> sparse.csc_matrix:
    """Edge-supported attention normalized by a softmax down each column.

    Entry ``(i, j)`` weights the message from node ``j`` into node ``i``;
    column ``j`` sums to one over the neighbors of ``j``.
    """
    X = _as_state(X)
    if X.shape[0] != g.n_nodes:
        raise ValueError("state rows do not match graph size")
    if cfg.w_k.shape[1] != X.shape[1]:
        raise ValueError(f"attention expects d={cfg.w_k.shape[1]}, state has d={X.shape[1]}")
    W = g.weights
    counts = np.diff(W.indptr)
    if np.any(counts == 0):
        raise ValueError("node without neighbors: attention column cannot be normalized")
    keys = X @ cfg.w_k.T
    queries = X @ cfg.w_q.T
    rows = W.indices
    cols = np.repeat(np.arange(g.n_nodes), counts)
    scores = np.einsum("ek,ek->e", keys[rows], queries[cols]) / cfg.d_bar
    col_max = np.maximum.reduceat(scores, W.indptr[:-1])
    ex = np.exp(scores - col_max[cols])
    col_sum = np.add.reduceat(ex, W.indptr[:-1])
    vals = ex / col_sum[cols]
    return sparse.csc_matrix((vals, rows.copy(), W.indptr.copy()), shape=W.shape)


def eval_grand_nl(cfg: AttentionConfig, g: Graph, X, A=None) -> np.ndarray:
    """``(A(X) - I) X``; pass ``A`` to use a frozen attention matrix."""
    X = _as_state(X)
    if A is None:
        A = attention_matrix(cfg, g, X)
    return np.asarray(A @ X) - X


def eval_grand_pp(base: DynamicsSpec, source, g: Graph, X, source_nodes=None) -> np.ndarray:
    """Base diffusion operator plus a constant source term."""
    X = _as_state(X)
    S = _as_state(source)
    if S.shape != X.shape:
        raise ValueError(f"source shape {S.shape} does not match state {X.shape}")
    _check_source_support(S, source_nodes)
    kind = base.base if base.kind == "grand_pp" else base.kind
    if kind == "grand_l":
        out = eval_grand_l(random_walk_laplacian(g), X)
    elif kind == "grand_nl":
        out = eval_grand_nl(base.attention, g, X)
    else:
        raise ValueError(f"grand_pp cannot wrap {kind!r}")
    return out + S


def _check_source_support(S: np.ndarray, source_nodes) -> None:
    if source_nodes is None:
        return
    mask = np.ones(S.shape[0], dtype=bool)
    mask[list(source_nodes)] = False
    if np.any(S[mask] != 0):
        raise ValueError("source has nonzero rows outside the source node set")


def _activation(name: str) -> Callable[[np.ndarray], np.ndarray]:
    return np.tanh if name == "tanh" else (lambda a: a)


def eval_graphcon(params: GraphConParams, g: Graph, Z) -> np.ndarray:
    """Oscillator system on the stacked state ``Z = [X; Y]``.

    Returns ``[Y; act(A X Theta) - gamma X - alpha Y]`` with ``A = W D^-1``.
    """
    Z = _as_state(Z)
    if Z.shape[0] % 2:
        raise ValueError("stacked state must have an even number of rows")
    n = Z.shape[0] // 2
    if n != g.n_nodes:
        raise ValueError("stacked state must have 2 * n_nodes rows")
    X, Y = Z[:n], Z[n:]
    d = X.shape[1]
    theta = np.eye(d) if params.theta is None else np.asarray(params.theta, dtype=float)
    if theta.shape != (d, d):
        raise ValueError(f"theta must be {(d, d)}, got {theta.shape}")
    AX = np.asarray(g.transition_matrix() @ X)
    accel = _activation(params.activation)(AX @ theta) - params.gamma * X - params.alpha * Y
    return np.vstack([Y, accel])


def build_rhs(spec: DynamicsSpec, g: Graph, X0) -> Rhs:
    """Close ``spec`` over the graph, returning ``X -> F(X)``.

    Constant operators (the Laplacian, the transition matrix, a frozen
    attention matrix) are assembled once here.
    """
    X0 = _as_state(X0)
    if spec.kind == "grand_l":
        L = random_walk_laplacian(g).matrix
        return lambda X: -np.asarray(L @ X)

    if spec.kind == "grand_nl":
        return _nl_rhs(spec.attention, g, X0)

    if spec.kind == "grand_pp":
        S = _as_state(spec.source)
        if S.shape != X0.shape:
            raise ValueError(f"source shape {S.shape} does not match state {X0.shape}")
        _check_source_support(S, spec.source_nodes)
        if spec.base == "grand_l":
            L = random_walk_laplacian(g).matrix
            return lambda X: S - np.asarray(L @ X)
        inner = _nl_rhs(spec.attention, g, X0)
        return lambda X: inner(X) + S

    params = spec.graphcon
    P = g.transition_matrix()
    n = g.n_nodes
    if X0.shape[0] != 2 * n:
        raise ValueError("graphcon needs the stacked initial state [X0; Y0]")
    d = X0.shape[1]
    theta = np.eye(d) if params.theta is None else np.asarray(params.theta, dtype=float)
    act = _activation(params.activation)

    def rhs(Z):
        X, Y = Z[:n], Z[n:]
        return np.vstack([Y, act(np.asarray(P @ X) @ theta) - params.gamma * X - params.alpha * Y])

    return rhs


def _nl_rhs(cfg: AttentionConfig, g: Graph, X0: np.ndarray) -> Rhs:
    if cfg.time_variant:
        return lambda X: eval_grand_nl(cfg, g, X)
    A = attention_matrix(cfg, g, X0)
    return lambda X: np.asarray(A @ X) - X


@dataclass
class CountingRhs:
    """Wraps a right-hand side and counts evaluations (used by tests)."""

    fn: Rhs
    calls: int = field(default=0)

    def __call__(self, X):
        self.calls += 1
        return self.fn(X)
