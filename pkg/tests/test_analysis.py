import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frond.analysis import (
    convergence_report,
    distance_to_stationary,
    fit_algebraic_slope,
    fit_exponential_rate,
    solver_error_report,
)
from frond.dynamics import DynamicsSpec
from frond.fdesolve import SolverConfig, Trajectory, solve, solve_linear_oracle, with_h
from frond.fraccalc import mittag_leffler
from frond.graphcore import stationary_distribution


def test_stationary_trajectory_has_zero_distance(g5):
    pi = stationary_distribution(g5)
    traj = Trajectory(np.arange(4.0), np.tile(pi[:, None], (4, 1, 1)))
    np.testing.assert_array_equal(distance_to_stationary(traj, pi, pi), 0.0)


def test_k2_distance_closed_form(k2, x0_k2):
    t = np.array([0.5, 1.0, 4.0, 30.0])
    traj = solve_linear_oracle(k2, x0_k2, 0.5, t)
    d = distance_to_stationary(traj, [0.5, 0.5], x0_k2)
    expected = [mittag_leffler(0.5, -2 * s ** 0.5).value / np.sqrt(2) for s in t]
    np.testing.assert_allclose(d, expected, rtol=1e-12)


def test_feature_distance_uses_column_mass(g5):
    X0 = np.random.default_rng(0).normal(size=(5, 3))
    pi = stationary_distribution(g5)
    target = np.outer(pi, X0.sum(axis=0))
    traj = Trajectory(np.array([0.0, 1.0]), np.stack([X0, target]))
    d = distance_to_stationary(traj, pi, X0)
    assert d[1] == 0.0
    assert d[0] == pytest.approx(np.linalg.norm(X0 - target))


def test_distance_dimension_mismatch(k2):
    traj = Trajectory(np.zeros(1), np.zeros((1, 2, 2)))
    with pytest.raises(ValueError):
        distance_to_stationary(traj, [0.5, 0.5], np.zeros((2, 1)))


def test_beta_one_log_distance_slope_is_minus_two(k2, x0_k2):
    t = np.linspace(0.5, 5, 40)
    d = distance_to_stationary(solve_linear_oracle(k2, x0_k2, 1.0, t), [0.5, 0.5], x0_k2)
    fit = fit_exponential_rate(t, d, 0.5, 5)
    assert fit.rate == pytest.approx(2.0, rel=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_exact_power_law_recovered():
    t = np.geomspace(1, 1e4, 25)
    fit = fit_algebraic_slope(t, t ** -0.5, 1, 1e4)
    assert abs(fit.slope + 0.5) <= 1e-10
    assert abs(fit.r_squared - 1.0) <= 1e-10
    assert fit.n_points == 25 and fit.t_window == (1.0, 1e4)


@settings(max_examples=40, deadline=None)
@given(p=st.floats(-3, 3), a=st.floats(-5, 5))
def test_power_law_exponent_recovered(p, a):
    t = np.geomspace(10, 1000, 20)
    fit = fit_algebraic_slope(t, np.exp(a) * t ** p)
    assert abs(fit.slope - p) <= 1e-10
    assert abs(fit.intercept - a) <= 1e-9


def test_slope_window_errors():
    t = np.array([1.0, 2.0, 3.0, 50.0])
    with pytest.raises(ValueError, match="fewer than 3"):
        fit_algebraic_slope(t, np.ones(4), 10, 100)
    with pytest.raises(ValueError, match="positive"):
        fit_algebraic_slope(t, [1.0, 0.0, 1.0, 1.0], 0.5, 5)


def test_k2_half_order_slope(k2, x0_k2):
    t = np.geomspace(10, 1000, 40)
    d = distance_to_stationary(solve_linear_oracle(k2, x0_k2, 0.5, t), [0.5, 0.5], x0_k2)
    assert -0.6 <= fit_algebraic_slope(t, d, 10, 1000).slope <= -0.4


def test_beta_one_prefers_exponential(k2, x0_k2):
    t = np.linspace(0.5, 5, 40)
    traj = solve_linear_oracle(k2, x0_k2, 1.0, t)
    rep = convergence_report(k2, traj, x0_k2, 0.5, 5)
    assert rep.exponential.r_squared > rep.algebraic.r_squared
    assert rep.preferred_model == "exponential"
    # K2 is bipartite, so the report is informational only
    assert rep.connected and not rep.aperiodic and rep.informational


def test_report_ergodic_graph(g5):
    X0 = np.eye(5)[:, [0]]
    t = np.geomspace(10, 1000, 30)
    rep = convergence_report(g5, solve_linear_oracle(g5, X0, 0.7, t), X0)
    assert not rep.informational and rep.preferred_model == "algebraic"
    assert abs(rep.algebraic.slope + 0.7) <= 0.1
    assert set(rep.to_dict()) >= {"algebraic", "exponential", "informational"}


def test_error_report_identical_is_zero(k2, x0_k2):
    tr = solve_linear_oracle(k2, x0_k2, 0.5, np.linspace(0, 1, 5))
    rep = solver_error_report(tr, tr)
    assert rep.max_abs == 0.0 and rep.mean_abs == 0.0
    assert not rep.per_time.any()


def test_error_report_predictor(k2, x0_k2):
    cfg = SolverConfig(0.5, 1e-3, 1.0)
    tr = solve(DynamicsSpec("grand_l"), k2, x0_k2, cfg)
    rep = solver_error_report(tr, solve_linear_oracle(k2, x0_k2, 0.5, tr.times))
    assert rep.max_abs <= 2e-2
    assert rep.per_time.shape == tr.times.shape
    assert rep.max_abs == rep.per_time.max()


def test_error_report_h_sweep_non_increasing(k2, x0_k2):
    cfg = SolverConfig(0.5, 2e-3, 1.0)
    errs = []
    for h in (2e-3, 1e-3, 5e-4):
        tr = solve(DynamicsSpec("grand_l"), k2, x0_k2, with_h(cfg, h))
        errs.append(solver_error_report(tr, solve_linear_oracle(k2, x0_k2, 0.5, tr.times)).max_abs)
    assert errs[0] >= errs[1] >= errs[2]


def test_error_report_grid_mismatch(k2, x0_k2):
    a = solve_linear_oracle(k2, x0_k2, 0.5, [0.0, 1.0])
    b = solve_linear_oracle(k2, x0_k2, 0.5, [0.0, 1.0 + 1e-9])
    with pytest.raises(ValueError, match="grid"):
        solver_error_report(a, b)
