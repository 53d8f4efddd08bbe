"""Post-processing of trajectories: distance to the rank-1 stationary state,
decay-rate fits, and solver error reports.

For ``beta < 1`` the distance to stationarity decays like ``t^-beta`` and is
fitted on log-log axes; at ``beta = 1`` the decay is exponential and a
log-linear fit describes it better.  Both fits are offered so the two
regimes can be compared on the same data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .fdesolve import Trajectory
from .graphcore import Graph, check_connectivity, stationary_distribution

DEFAULT_WINDOW = (10.0, 1000.0)


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares line through ``(log t, log distance)``.

    ``slope`` approximates ``-beta`` in the algebraic regime.
    """

    slope: float
    intercept: float
    r_squared: float
    t_window: tuple[float, float]
    n_points: int

    def to_dict(self) -> dict:
        return {
            "slope": self.slope, "intercept": self.intercept,
            "r_squared": self.r_squared, "t_window": list(self.t_window),
            "n_points": self.n_points,
        }


@dataclass(frozen=True)
class ExponentialFit:
    """Least-squares line through ``(t, log distance)``; ``rate`` is the decay rate."""

    rate: float
    intercept: float
    r_squared: float
    t_window: tuple[float, float]
    n_points: int

    def to_dict(self) -> dict:
        return {
            "rate": self.rate, "intercept": self.intercept,
            "r_squared": self.r_squared, "t_window": list(self.t_window),
            "n_points": self.n_points,
        }


def stationary_state(pi, X0) -> np.ndarray:
    """Rank-1 limit ``pi (1^T X0)`` of the diffusion started at ``X0``."""
    pi = np.asarray(pi, dtype=float).ravel()
    X0 = np.asarray(X0, dtype=float)
    if X0.ndim == 1:
        X0 = X0[:, None]
    if X0.shape[0] != pi.size:
        raise ValueError(f"X0 has {X0.shape[0]} rows but pi has {pi.size} entries")
    return np.outer(pi, X0.sum(axis=0))


def distance_to_stationary(traj: Trajectory, pi, X0) -> np.ndarray:
    """Frobenius distance ``||X(t) - pi (1^T X0)||_F`` at every recorded time.

    For a probability trajectory (one column summing to one) this is the
    Euclidean distance ``||P(t) - pi||_2``.
    """
    target = stationary_state(pi, X0)
    states = np.asarray(traj.states, dtype=float)
    if states.ndim == 2:
        states = states[:, :, None]
    if states.shape[1:] != target.shape:
        raise ValueError(
            f"trajectory states {states.shape[1:]} do not match X0 {target.shape}"
        )
    return np.sqrt(np.sum((states - target) ** 2, axis=(1, 2)))


def _window(times, distances, t_min: float, t_max: float):
    t = np.asarray(times, dtype=float).ravel()
    d = np.asarray(distances, dtype=float).ravel()
    if t.shape != d.shape:
        raise ValueError("times and distances must have equal length")
    if not t_min < t_max:
        raise ValueError("need t_min < t_max")
    mask = (t >= t_min) & (t <= t_max)
    t, d = t[mask], d[mask]
    if t.size < 3:
        raise ValueError(f"fewer than 3 samples in window [{t_min}, {t_max}]")
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise ValueError("distances in the fit window must be positive and finite")
    return t, d


def _r_squared(res) -> float:
    return float(min(1.0, max(0.0, res.rvalue ** 2)))


def fit_algebraic_slope(times, distances, t_min: float = DEFAULT_WINDOW[0],
                        t_max: float = DEFAULT_WINDOW[1]) -> SlopeFit:
    """Fit ``log d = slope * log t + intercept`` over ``t_min <= t <= t_max``."""
    t, d = _window(times, distances, t_min, t_max)
    if np.any(t <= 0):
        raise ValueError("times in the fit window must be positive")
    res = stats.linregress(np.log(t), np.log(d))
    return SlopeFit(float(res.slope), float(res.intercept), _r_squared(res),
                    (float(t_min), float(t_max)), int(t.size))


def fit_exponential_rate(times, distances, t_min: float, t_max: float) -> ExponentialFit:
    """Fit ``log d = -rate * t + intercept`` over ``t_min <= t <= t_max``."""
    t, d = _window(times, distances, t_min, t_max)
    res = stats.linregress(t, np.log(d))
    return ExponentialFit(float(-res.slope), float(res.intercept), _r_squared(res),
                          (float(t_min), float(t_max)), int(t.size))


@dataclass(frozen=True)
class ConvergenceReport:
    """Both decay fits plus the graph preconditions they rely on.

    When the graph is disconnected or periodic the stationary limit need not
    be reached, and ``informational`` is set.
    """

    algebraic: SlopeFit
    exponential: ExponentialFit
    connected: bool
    aperiodic: bool

    @property
    def informational(self) -> bool:
        return not (self.connected and self.aperiodic)

    @property
    def preferred_model(self) -> str:
        if self.exponential.r_squared > self.algebraic.r_squared:
            return "exponential"
        return "algebraic"

    def to_dict(self) -> dict:
        return {
            "algebraic": self.algebraic.to_dict(),
            "exponential": self.exponential.to_dict(),
            "connected": self.connected,
            "aperiodic": self.aperiodic,
            "informational": self.informational,
            "preferred_model": self.preferred_model,
        }


def convergence_report(g: Graph, traj: Trajectory, X0, t_min: float = DEFAULT_WINDOW[0],
                       t_max: float = DEFAULT_WINDOW[1], pi=None) -> ConvergenceReport:
    """Distance to stationarity, fitted both ways over the same window."""
    pi = stationary_distribution(g) if pi is None else pi
    dist = distance_to_stationary(traj, pi, X0)
    conn = check_connectivity(g)
    return ConvergenceReport(
        fit_algebraic_slope(traj.times, dist, t_min, t_max),
        fit_exponential_rate(traj.times, dist, t_min, t_max),
        conn.connected,
        conn.aperiodic,
    )


@dataclass(frozen=True)
class ErrorReport:
    max_abs: float
    mean_abs: float
    per_time: np.ndarray = field(repr=False)
    times: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "max_abs": self.max_abs,
            "mean_abs": self.mean_abs,
            "per_time": self.per_time.tolist(),
            "times": None if self.times is None else self.times.tolist(),
        }


def solver_error_report(traj: Trajectory, oracle: Trajectory, tol: float = 1e-12) -> ErrorReport:
    """Elementwise absolute error of ``traj`` against ``oracle``.

    ``per_time`` holds the max absolute error at each recorded time.
    """
    t1 = np.asarray(traj.times, dtype=float)
    t2 = np.asarray(oracle.times, dtype=float)
    if t1.shape != t2.shape or np.any(np.abs(t1 - t2) > tol * np.maximum(1.0, np.abs(t2))):
        raise ValueError("trajectory and oracle time grids do not match")
    a = np.asarray(traj.states, dtype=float)
    b = np.asarray(oracle.states, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"state shapes differ: {a.shape} vs {b.shape}")
    err = np.abs(a - b).reshape(len(t1), -1)
    per_time = err.max(axis=1) if err.size else np.zeros(len(t1))
    return ErrorReport(float(err.max(initial=0.0)), float(err.mean()) if err.size else 0.0,
                       per_time, t1.copy())
