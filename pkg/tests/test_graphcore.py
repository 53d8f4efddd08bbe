import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frond.graphcore import (
    Graph,
    GraphError,
    check_connectivity,
    complete_graph,
    load_graph,
    path_graph,
    random_graph,
    random_walk_laplacian,
    save_graph,
    stationary_distribution,
)


def test_k2_document_degrees():
    g = load_graph({"n": 2, "edges": [[0, 1, 1.0]]})
    assert g.degree.tolist() == [1.0, 1.0]


def test_p3_degrees():
    g = load_graph({"n_nodes": 3, "edges": [[0, 1, 1], [1, 2, 1]], "undirected": True})
    assert g.degree.tolist() == [1.0, 2.0, 1.0]


def test_self_loop_rejected():
    with pytest.raises(GraphError, match="self-loop"):
        load_graph({"n_nodes": 2, "edges": [[0, 0, 1], [0, 1, 1]]})


@pytest.mark.parametrize(
    "doc, match",
    [
        ({"n_nodes": 3, "edges": [[0, 1, 1.0]]}, "isolated"),
        ({"n_nodes": 2, "edges": [[0, 1, 1.0], [1, 0, 2.0]]}, "conflicting"),
        ({"n_nodes": 2, "edges": [[0, 2, 1.0]]}, "outside"),
        ({"n_nodes": 2, "edges": [[0, 1, -1.0]]}, "positive"),
        ({"n_nodes": 2, "edges": [[0, 1, float("nan")]]}, "positive"),
        ({"n_nodes": 2, "edges": [[0, 1]]}, r"\[i, j, w\]"),
        ({"n_nodes": 2, "edges": [[0.5, 1, 1.0]]}, "integers"),
        ({"edges": [[0, 1, 1.0]]}, "n_nodes"),
        ({"n_nodes": 2, "edges": [[0, 1, 1.0]], "undirected": False}, "undirected"),
        ({"n_nodes": 2, "edges": "nope"}, "list"),
    ],
)
def test_malformed_documents(doc, match):
    with pytest.raises(GraphError, match=match):
        load_graph(doc)


def test_malformed_json_text():
    with pytest.raises(GraphError, match="malformed"):
        load_graph('{"n_nodes": 2, ')


def test_duplicate_edges_merge():
    g = load_graph({"n_nodes": 2, "edges": [[0, 1, 2.0], [1, 0, 2.0]]})
    assert g.edges == ((0, 1, 2.0),)
    assert g.degree.tolist() == [2.0, 2.0]


def test_k2_laplacian():
    L = random_walk_laplacian(complete_graph(2))
    np.testing.assert_array_equal(L.toarray(), [[1, -1], [-1, 1]])
    assert L.column_stochastic


def test_p3_laplacian():
    L = random_walk_laplacian(path_graph(3))
    np.testing.assert_allclose(L.toarray(), [[1, -0.5, 0], [-1, 1, -1], [0, -0.5, 1]], atol=0)


def test_stationary_examples():
    np.testing.assert_allclose(stationary_distribution(complete_graph(2)), [0.5, 0.5])
    np.testing.assert_allclose(stationary_distribution(path_graph(3)), [0.25, 0.5, 0.25])


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 12), p=st.floats(0.0, 1.0), seed=st.integers(0, 10_000))
def test_laplacian_invariants(n, p, seed):
    g = random_graph(n, p=p, seed=seed)
    L = random_walk_laplacian(g)
    A = L.toarray()
    np.testing.assert_allclose(np.ones(n) @ A, 0.0, atol=1e-12)
    np.testing.assert_array_equal(np.diag(A), 1.0)
    pi = stationary_distribution(g)
    assert abs(pi.sum() - 1.0) <= 1e-12
    assert np.all(pi > 0)
    np.testing.assert_allclose(A @ pi, 0.0, atol=1e-12)
    # symmetric weights
    W = g.weights.toarray()
    np.testing.assert_array_equal(W, W.T)


def test_save_load_roundtrip_is_bitwise(tmp_path, g10):
    path = tmp_path / "g.json"
    save_graph(g10, path)
    g2 = load_graph(path)
    a = random_walk_laplacian(g10).matrix
    b = random_walk_laplacian(g2).matrix
    assert (a != b).nnz == 0
    np.testing.assert_array_equal(a.toarray(), b.toarray())
    assert json.loads(path.read_text())["undirected"] is True


def test_load_json_string():
    g = load_graph('{"n_nodes": 2, "edges": [[0, 1, 3.0]]}')
    assert g.degree.tolist() == [3.0, 3.0]


def test_graph_is_immutable(k2):
    with pytest.raises(ValueError):
        k2.degree[0] = 5.0
    with pytest.raises(AttributeError):
        k2.n_nodes = 3


def test_connectivity_report(k2, g5):
    rep = check_connectivity(k2)
    assert rep.connected and rep.period == 2 and not rep.ergodic
    rep = check_connectivity(g5)
    assert rep.connected and rep.aperiodic and rep.ergodic
    assert check_connectivity(complete_graph(3)).aperiodic


def test_disconnected_graph_detected():
    g = Graph.from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)])
    assert not check_connectivity(g).connected


def test_neighbors_probabilities(g5):
    nbrs, probs = g5.neighbors(1)
    assert sorted(nbrs.tolist()) == [0, 2, 3]
    assert abs(probs.sum() - 1.0) < 1e-15
