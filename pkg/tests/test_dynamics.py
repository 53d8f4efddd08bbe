import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frond.dynamics import (
    AttentionConfig,
    DynamicsSpec,
    GraphConParams,
    attention_matrix,
    build_rhs,
    eval_grand_l,
    eval_grand_nl,
    eval_grand_pp,
    eval_graphcon,
)
from frond.graphcore import random_graph, random_walk_laplacian


def test_grand_l_k2_by_hand(k2):
    out = eval_grand_l(random_walk_laplacian(k2), [[1.0], [0.0]])
    np.testing.assert_array_equal(out, [[-1.0], [1.0]])


def test_grand_l_constant_on_k2(k2):
    out = eval_grand_l(random_walk_laplacian(k2), [[2.5], [2.5]])
    np.testing.assert_array_equal(out, [[0.0], [0.0]])


def test_grand_l_dimension_mismatch(k2):
    with pytest.raises(ValueError):
        eval_grand_l(random_walk_laplacian(k2), np.ones((3, 1)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 10), d=st.integers(1, 4))
def test_grand_l_and_nl_conserve_mass(seed, n, d):
    g = random_graph(n, p=0.4, seed=seed)
    X = np.random.default_rng(seed).normal(size=(n, d))
    L = random_walk_laplacian(g)
    np.testing.assert_allclose(eval_grand_l(L, X).sum(axis=0), 0.0, atol=1e-12)
    cfg = AttentionConfig.random(d, seed=seed)
    np.testing.assert_allclose(eval_grand_nl(cfg, g, X).sum(axis=0), 0.0, atol=1e-12)


def test_attention_uniform_for_equal_features(g10):
    cfg = AttentionConfig(np.eye(2), np.eye(2))
    A = attention_matrix(cfg, g10, np.ones((10, 2))).toarray()
    deg_count = (g10.weights.toarray() > 0).sum(axis=0)
    for j in range(10):
        col = A[:, j]
        np.testing.assert_allclose(col[col > 0], 1.0 / deg_count[j], rtol=1e-14)
        assert np.count_nonzero(col) == deg_count[j]


def test_attention_k2_is_swap(k2):
    cfg = AttentionConfig.random(3, seed=1)
    A = attention_matrix(cfg, k2, np.random.default_rng(0).normal(size=(2, 3)))
    np.testing.assert_array_equal(A.toarray(), [[0.0, 1.0], [1.0, 0.0]])


def test_attention_columns_sum_to_one(g10):
    cfg = AttentionConfig.random(4, d_k=3, seed=2)
    X = np.random.default_rng(5).normal(size=(10, 4)) * 10
    A = attention_matrix(cfg, g10, X)
    np.testing.assert_allclose(np.asarray(A.sum(axis=0)).ravel(), 1.0, atol=1e-12)
    # supported on edges only
    assert ((A.toarray() > 0) <= (g10.weights.toarray() > 0)).all()


def test_attention_dimension_check(k2):
    with pytest.raises(ValueError, match="expects d"):
        attention_matrix(AttentionConfig.random(3), k2, np.ones((2, 2)))
    with pytest.raises(ValueError):
        AttentionConfig(np.eye(2), np.eye(3))


def test_frozen_attention_equal_to_transition_reproduces_grand_l(g10):
    X = np.random.default_rng(1).normal(size=(10, 3))
    P = g10.transition_matrix()
    L = random_walk_laplacian(g10)
    out = eval_grand_nl(AttentionConfig.random(3), g10, X, A=P)
    np.testing.assert_allclose(out, eval_grand_l(L, X), atol=1e-12)


def test_grand_nl_constant_on_k2(k2):
    out = eval_grand_nl(AttentionConfig.random(2, seed=4), k2, np.full((2, 2), 1.5))
    np.testing.assert_array_equal(out, 0.0)


def test_frozen_attention_uses_initial_state(g10):
    rng = np.random.default_rng(3)
    X0, X1 = rng.normal(size=(10, 2)), rng.normal(size=(10, 2))
    cfg = AttentionConfig.random(2, seed=9, time_variant=False)
    rhs = build_rhs(DynamicsSpec("grand_nl", attention=cfg), g10, X0)
    A0 = attention_matrix(cfg, g10, X0)
    np.testing.assert_allclose(rhs(X1), A0 @ X1 - X1, atol=1e-14)
    live = build_rhs(DynamicsSpec("grand_nl", attention=AttentionConfig.random(2, seed=9)), g10, X0)
    assert not np.allclose(live(X1), rhs(X1))


def test_grand_pp_zero_source_is_base(g10):
    X = np.random.default_rng(2).normal(size=(10, 2))
    spec = DynamicsSpec("grand_pp", source=np.zeros((10, 2)))
    out = eval_grand_pp(spec, np.zeros((10, 2)), g10, X)
    np.testing.assert_array_equal(out, eval_grand_l(random_walk_laplacian(g10), X))


def test_grand_pp_adds_source_on_constant_state(k2):
    S = np.array([[0.3], [0.0]])
    spec = DynamicsSpec("grand_pp", source=S, source_nodes=(0,))
    out = eval_grand_pp(spec, S, k2, np.full((2, 1), 4.0), source_nodes=(0,))
    np.testing.assert_array_equal(out, S)


def test_grand_pp_source_support_enforced(k2):
    S = np.array([[0.3], [0.1]])
    with pytest.raises(ValueError, match="outside"):
        build_rhs(DynamicsSpec("grand_pp", source=S, source_nodes=(0,)), k2, np.zeros((2, 1)))
    with pytest.raises(ValueError, match="does not match"):
        eval_grand_pp(DynamicsSpec("grand_pp", source=S), np.ones((3, 1)), k2, np.ones((2, 1)))


def test_graphcon_all_couplings_off(k2):
    p = GraphConParams(gamma=0.0, alpha=0.0, activation="identity", theta=np.zeros((2, 2)))
    Z = np.random.default_rng(0).normal(size=(4, 2))
    out = eval_graphcon(p, k2, Z)
    np.testing.assert_array_equal(out[:2], Z[2:])
    np.testing.assert_array_equal(out[2:], 0.0)


def test_graphcon_reduces_to_grand_l(g10):
    p = GraphConParams(gamma=1.0, alpha=0.7, activation="identity")
    X = np.random.default_rng(1).normal(size=(10, 3))
    out = eval_graphcon(p, g10, np.vstack([X, np.zeros_like(X)]))
    np.testing.assert_allclose(out[10:], eval_grand_l(random_walk_laplacian(g10), X), atol=1e-12)
    np.testing.assert_array_equal(out[:10], 0.0)


def test_graphcon_origin_fixed(k2):
    assert not eval_graphcon(GraphConParams(), k2, np.zeros((4, 3))).any()


def test_graphcon_shape_errors(k2):
    with pytest.raises(ValueError, match="even"):
        eval_graphcon(GraphConParams(), k2, np.zeros((3, 1)))
    with pytest.raises(ValueError, match="2 \\* n_nodes"):
        eval_graphcon(GraphConParams(), k2, np.zeros((6, 1)))


def test_build_rhs_matches_direct_operators(g10):
    X = np.random.default_rng(8).normal(size=(10, 2))
    Z = np.vstack([X, X[::-1]])
    gc = GraphConParams(gamma=0.5, alpha=0.2)
    np.testing.assert_allclose(build_rhs(DynamicsSpec("graphcon", graphcon=gc), g10, Z)(Z),
                               eval_graphcon(gc, g10, Z), atol=1e-14)
    cfg = AttentionConfig.random(2, seed=3)
    np.testing.assert_allclose(build_rhs(DynamicsSpec("grand_nl", attention=cfg), g10, X)(X),
                               eval_grand_nl(cfg, g10, X), atol=1e-14)


@pytest.mark.parametrize(
    "kwargs, match",
    [
        ({"kind": "heat"}, "unknown"),
        ({"kind": "grand_nl"}, "attention"),
        ({"kind": "grand_pp"}, "source"),
        ({"kind": "grand_pp", "source": np.zeros((2, 1)), "base": "graphcon"}, "base"),
    ],
)
def test_spec_validation(kwargs, match):
    with pytest.raises(ValueError, match=match):
        DynamicsSpec(**kwargs)


def test_graphcon_params_validation():
    with pytest.raises(ValueError):
        GraphConParams(gamma=-1.0)
    with pytest.raises(ValueError):
        GraphConParams(activation="relu")
