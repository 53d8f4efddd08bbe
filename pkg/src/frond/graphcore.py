"""Undirected weighted graphs and the random-walk Laplacian.

The transition operator used everywhere in the package is the
column-stochastic matrix ``W D^{-1}``; column ``j`` holds the jump
probabilities out of node ``j``.  Dynamics therefore act on column vectors
of node values (one column per feature), and probability vectors are
columns as well.
"""

from __future__ import annotations

import json
import math
import os
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy import sparse


class GraphError(ValueError):
    """Raised for malformed graph documents or invalid graph structure."""


@dataclass(frozen=True)
class Graph:
    """Immutable undirected weighted graph without self-loops.

    Attributes
    ----------
    n_nodes : int
        Number of nodes, labelled ``0 .. n_nodes - 1``.
    edges : tuple of (int, int, float)
        Each undirected pair stored once with ``i < j``.
    degree : ndarray
        ``d_i = sum_j W_ij``.
    weights : scipy.sparse.csc_matrix
        Symmetric weight matrix ``W``.
    """

    n_nodes: int
    edges: tuple[tuple[int, int, float], ...]
    degree: np.ndarray = field(repr=False)
    weights: sparse.csc_matrix = field(repr=False)

    @classmethod
    def from_edges(cls, n_nodes: int, edges) -> "Graph":
        """Build a graph from an iterable of ``(i, j, w)`` triples.

        Duplicate pairs with identical weights are merged; conflicting
        weights, self-loops, nonpositive weights and isolated nodes raise
        :class:`GraphError`.
        """
        if isinstance(n_nodes, bool) or not isinstance(n_nodes, (int, np.integer)):
            raise GraphError(f"n_nodes must be an integer, got {n_nodes!r}")
        n = int(n_nodes)
        if n < 1:
            raise GraphError("n_nodes must be positive")

        pairs: dict[tuple[int, int], float] = {}
        for e in edges:
            try:
                i, j, w = e
            except (TypeError, ValueError):
                raise GraphError(f"edge must be [i, j, w], got {e!r}") from None
            if not all(isinstance(v, (int, np.integer)) and not isinstance(v, bool) for v in (i, j)):
                raise GraphError(f"edge endpoints must be integers: {e!r}")
            i, j, w = int(i), int(j), float(w)
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"edge {e!r} references a node outside [0, {n})")
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            if not (math.isfinite(w) and w > 0):
                raise GraphError(f"edge weight must be positive and finite: {e!r}")
            key = (min(i, j), max(i, j))
            if key in pairs and pairs[key] != w:
                raise GraphError(
                    f"conflicting weights for edge {key}: {pairs[key]} vs {w}"
                )
            pairs[key] = w

        ordered = tuple((i, j, w) for (i, j), w in sorted(pairs.items()))
        if ordered:
            ii, jj, ww = (np.array(a) for a in zip(*ordered))
            rows = np.concatenate([ii, jj])
            cols = np.concatenate([jj, ii])
            vals = np.concatenate([ww, ww]).astype(float)
        else:
            rows = cols = np.zeros(0, dtype=int)
            vals = np.zeros(0)
        W = sparse.csc_matrix((vals, (rows, cols)), shape=(n, n))
        W.sort_indices()
        deg = np.asarray(W.sum(axis=0)).ravel()
        isolated = np.flatnonzero(deg <= 0)
        if isolated.size:
            raise GraphError(f"isolated node(s): {isolated.tolist()}")
        deg.setflags(write=False)
        return cls(n, ordered, deg, W)

    def to_document(self) -> dict[str, Any]:
        return {
            "n_nodes": self.n_nodes,
            "edges": [[i, j, w] for i, j, w in self.edges],
            "undirected": True,
        }

    def neighbors(self, node: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor indices of ``node`` and their jump probabilities ``W_jk / d_j``."""
        start, stop = self.weights.indptr[node], self.weights.indptr[node + 1]
        nbrs = self.weights.indices[start:stop]
        probs = self.weights.data[start:stop] / self.degree[node]
        return nbrs, probs

    def transition_matrix(self) -> sparse.csc_matrix:
        """Column-stochastic ``W D^{-1}``."""
        return sparse.csc_matrix(self.weights @ sparse.diags(1.0 / self.degree))


@dataclass(frozen=True)
class Laplacian:
    """Random-walk Laplacian ``L = I - W D^{-1}``.

    ``column_stochastic`` records whether every column of ``W D^{-1}`` summed
    to one within the checking tolerance at construction.
    """

    matrix: sparse.csc_matrix
    transition: sparse.csc_matrix
    column_stochastic: bool
    degree: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, other):
        return self.matrix @ other


def load_graph(source) -> Graph:
    """Load a graph from a JSON document.

    ``source`` may be a mapping already parsed from JSON, a JSON string, or a
    path to a JSON file.  The document has the form
    ``{"n_nodes": int, "edges": [[i, j, w], ...], "undirected": true}``.
    """
    if isinstance(source, dict):
        doc = source
    elif isinstance(source, Path) or (
        isinstance(source, str) and not source.lstrip().startswith("{")
    ):
        try:
            with open(source, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphError(f"malformed graph document: {exc}") from None
    else:
        try:
            doc = json.loads(source)
        except (TypeError, json.JSONDecodeError) as exc:
            raise GraphError(f"malformed graph document: {exc}") from None

    if not isinstance(doc, dict):
        raise GraphError("graph document must be a JSON object")
    # accept the short key used in hand-written fixtures
    n = doc.get("n_nodes", doc.get("n"))
    if n is None or "edges" not in doc:
        raise GraphError("graph document needs 'n_nodes' and 'edges'")
    if doc.get("undirected", True) is not True:
        raise GraphError("only undirected graphs are supported")
    if not isinstance(doc["edges"], list):
        raise GraphError("'edges' must be a list")
    return Graph.from_edges(n, doc["edges"])


def save_graph(g: Graph, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(g.to_document(), fh)
    os.replace(tmp, path)


def random_walk_laplacian(g: Graph, tol: float = 1e-12) -> Laplacian:
    P = g.transition_matrix()
    col_sums = np.asarray(P.sum(axis=0)).ravel()
    ok = bool(np.all(np.abs(col_sums - 1.0) <= tol))
    if not ok:
        raise GraphError("W D^-1 is not column stochastic")
    L = sparse.csc_matrix(sparse.identity(g.n_nodes, format="csc") - P)
    L.sort_indices()
    return Laplacian(L, P, ok, g.degree)


def stationary_distribution(g: Graph) -> np.ndarray:
    """``pi_i = d_i / sum_j d_j``, the fixed point of ``W D^{-1}``."""
    return g.degree / g.degree.sum()


@dataclass(frozen=True)
class ConnectivityReport:
    connected: bool
    period: int

    @property
    def aperiodic(self) -> bool:
        return self.period == 1

    @property
    def ergodic(self) -> bool:
        return self.connected and self.aperiodic


def check_connectivity(g: Graph) -> ConnectivityReport:
    """BFS connectivity plus the walk period.

    The period is the gcd of ``level[u] + 1 - level[v]`` over all edges,
    which for an undirected graph is 2 when bipartite and 1 otherwise.
    """
    level = np.full(g.n_nodes, -1)
    level[0] = 0
    queue = deque([0])
    W = g.weights
    while queue:
        u = queue.popleft()
        for v in W.indices[W.indptr[u]:W.indptr[u + 1]]:
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
    connected = bool(np.all(level >= 0))
    period = 0
    for i, j, _ in g.edges:
        if level[i] >= 0 and level[j] >= 0:
            period = math.gcd(period, abs(int(level[i]) + 1 - int(level[j])))
            period = math.gcd(period, abs(int(level[j]) + 1 - int(level[i])))
    return ConnectivityReport(connected, period)


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j, 1.0) for i in range(n) for j in range(i + 1, n)])


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1, 1.0) for i in range(n - 1)])


def random_graph(n: int, p: float = 0.3, seed: int = 0) -> Graph:
    """Connected random graph: a random spanning tree plus Erdos-Renyi extras,
    with weights uniform on [0.5, 2)."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    edges = {}
    for k in range(1, n):
        a, b = int(order[k]), int(order[rng.integers(k)])
        edges[(min(a, b), max(a, b))] = float(rng.uniform(0.5, 2.0))
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in edges and rng.random() < p:
                edges[(i, j)] = float(rng.uniform(0.5, 2.0))
    return Graph.from_edges(n, [(i, j, w) for (i, j), w in edges.items()])
