"""Time stepping for ``D_t^beta X = F(X)`` with ``0 < beta <= 1``.

Three schemes share one loop structure:

``predictor``
    Fractional Adams-Bashforth (product rectangle rule).  Reduces to
    explicit Euler at ``beta = 1``.
``predictor_corrector``
    Fractional Adams-Bashforth-Moulton: the predictor followed by
    ``corrector_iters`` product-trapezoid corrections.
``implicit_l1``
    L1 discretization of the Caputo derivative, solved by fixed-point
    substitution of the right-hand side.

Setting ``memory_window`` on the first two truncates their history sums to
the last ``K`` steps.  The initial condition term ``X(0)`` is always kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np

from .dynamics import DynamicsSpec, Rhs, build_rhs
from .fraccalc import _check_beta, mittag_leffler_array
from .graphcore import Graph, GraphError, Laplacian, random_walk_laplacian

METHODS = ("predictor", "predictor_corrector", "implicit_l1")


class SolverDivergence(FloatingPointError):
    """A non-finite state appeared; ``step`` is the offending step index."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


@dataclass(frozen=True)
class SolverConfig:
    beta: float
    h: float
    t_final: float
    method: str = "predictor"
    memory_window: Optional[int] = None
    corrector_iters: int = 1
    record_every: int = 1

    def __post_init__(self):
        _check_beta(self.beta)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not (self.h > 0 and self.t_final > 0):
            raise ValueError("h and t_final must be positive")
        if self.h > self.t_final * (1 + 1e-12):
            raise ValueError("h must not exceed t_final")
        ratio = self.t_final / self.h
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError("t_final must be an integer multiple of h")
        if self.memory_window is not None:
            if self.memory_window < 1:
                raise ValueError("memory_window must be >= 1")
            if self.method == "implicit_l1":
                raise ValueError("memory_window applies to predictor methods only")
        if self.corrector_iters < 1:
            raise ValueError("corrector_iters must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.method == "implicit_l1" and self.beta == 1.0:
            raise ValueError("implicit_l1 needs beta < 1 (L1 weights degenerate at beta = 1)")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.h))

    def to_dict(self) -> dict:
        return {
            "beta": self.beta, "h": self.h, "t_final": self.t_final,
            "method": self.method, "memory_window": self.memory_window,
            "corrector_iters": self.corrector_iters, "record_every": self.record_every,
        }


@dataclass
class Trajectory:
    """Recorded snapshots; ``states[i]`` is the ``(N, d)`` state at ``times[i]``."""

    times: np.ndarray
    states: np.ndarray
    solver_meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def at(self, t: float, atol: float = 1e-9) -> np.ndarray:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > atol:
            raise KeyError(f"time {t} not recorded")
        return self.states[idx]


# --------------------------------------------------------------------------
# quadrature weights, as functions of the lag m = k - j

def predictor_weights(beta: float, h: float, k: int, lo: int = 0) -> np.ndarray:
    """``mu_{j,k} / Gamma(beta)`` for ``j = lo .. k-1``."""
    m = (k - np.arange(lo, k)).astype(float)
    return (h ** beta / beta) * (m ** beta - (m - 1.0) ** beta) / math.gamma(beta)


def corrector_weights(beta: float, h: float, k: int, lo: int = 0) -> tuple[np.ndarray, float]:
    """``eta_{j,k} / Gamma(beta)`` for ``j = lo .. k-1`` and for ``j = k``."""
    scale = h ** beta / (beta * (beta + 1.0)) / math.gamma(beta)
    j = np.arange(lo, k)
    m = (k - j).astype(float)
    b1 = beta + 1.0
    w = (m + 1.0) ** b1 + (m - 1.0) ** b1 - 2.0 * m ** b1
    if lo == 0:
        w[0] = (k - 1.0) ** b1 - (k - 1.0 - beta) * float(k) ** beta
    return scale * w, scale


def l1_history_weights(beta: float, k: int) -> np.ndarray:
    """``R_{k,j}`` for ``j = 0 .. k-2`` (lags ``m = k .. 2``)."""
    m = (k - np.arange(0, k - 1)).astype(float)
    a = 1.0 - beta
    return m ** a - (m - 1.0) ** a


# --------------------------------------------------------------------------
# integrators on a bare right-hand side

def _as_state(X0) -> np.ndarray:
    X0 = np.array(X0, dtype=float)
    if X0.ndim == 1:
        X0 = X0[:, None]
    if X0.ndim != 2:
        raise ValueError("initial state must be an (N, d) matrix")
    if not np.all(np.isfinite(X0)):
        raise ValueError("initial state has non-finite entries")
    return X0


def _check(X: np.ndarray, k: int) -> np.ndarray:
    if not np.all(np.isfinite(X)):
        raise SolverDivergence(k)
    return X


def _recorder(cfg: SolverConfig, X0: np.ndarray):
    n = cfg.n_steps
    idx = list(range(0, n + 1, cfg.record_every))
    if idx[-1] != n:
        idx.append(n)
    slot = {k: i for i, k in enumerate(idx)}
    states = np.empty((len(idx),) + X0.shape)
    states[0] = X0
    times = np.array(idx, dtype=float) * cfg.h
    return slot, times, states


def integrate(rhs: Rhs, X0, cfg: SolverConfig) -> Trajectory:
    """Run the scheme selected by ``cfg.method`` on ``X -> rhs(X)``."""
    X0 = _as_state(X0)
    if cfg.method == "implicit_l1":
        return _run_l1(rhs, X0, cfg)
    return _run_abm(rhs, X0, cfg)


def _run_abm(rhs: Rhs, X0: np.ndarray, cfg: SolverConfig) -> Trajectory:
    beta, h, n = cfg.beta, cfg.h, cfg.n_steps
    K = cfg.memory_window
    correct = cfg.method == "predictor_corrector"
    slot, times, states = _recorder(cfg, X0)

    # history of F evaluated at accepted states
    F = np.empty((n + 1,) + X0.shape)
    F[0] = _check(rhs(X0), 0)
    for k in range(1, n + 1):
        lo = 0 if K is None else max(0, k - K)
        hist = F[lo:k]
        X = X0 + np.tensordot(predictor_weights(beta, h, k, lo), hist, axes=1)
        _check(X, k)
        if correct:
            w, w_kk = corrector_weights(beta, h, k, lo)
            base = X0 + np.tensordot(w, hist, axes=1)
            for _ in range(cfg.corrector_iters):
                X = _check(base + w_kk * rhs(X), k)
        F[k] = _check(rhs(X), k)
        if k in slot:
            states[slot[k]] = X
    return Trajectory(times, states, cfg.to_dict())


def _run_l1(rhs: Rhs, X0: np.ndarray, cfg: SolverConfig) -> Trajectory:
    beta, h, n = cfg.beta, cfg.h, cfg.n_steps
    inv_mu = h ** beta * math.gamma(2.0 - beta)
    slot, times, states = _recorder(cfg, X0)

    D = np.empty((n,) + X0.shape)  # D[j] = X^{(j+1)} - X^{(j)}
    X_prev = X0
    for k in range(1, n + 1):
        rhs_hist = X_prev
        if k >= 2:
            rhs_hist = X_prev - np.tensordot(l1_history_weights(beta, k), D[: k - 1], axes=1)
        X = _check(rhs_hist + inv_mu * rhs(X_prev), k)
        for _ in range(cfg.corrector_iters):
            X = _check(rhs_hist + inv_mu * rhs(X), k)
        D[k - 1] = X - X_prev
        X_prev = X
        if k in slot:
            states[slot[k]] = X
    return Trajectory(times, states, cfg.to_dict())


# --------------------------------------------------------------------------
# public solvers on (dynamics, graph)

DynLike = Union[DynamicsSpec, Callable[[np.ndarray], np.ndarray]]


def _rhs_for(dyn: DynLike, g: Optional[Graph], X0) -> Rhs:
    if isinstance(dyn, DynamicsSpec):
        if g is None:
            raise ValueError("a graph is required with a DynamicsSpec")
        return build_rhs(dyn, g, X0)
    if callable(dyn):
        return dyn
    raise TypeError("dyn must be a DynamicsSpec or a callable X -> F(X)")


def _expect(cfg: SolverConfig, method: str) -> SolverConfig:
    if cfg.method != method:
        raise ValueError(f"config method is {cfg.method!r}, expected {method!r}")
    return cfg


def solve_predictor(dyn: DynLike, g: Optional[Graph], X0, cfg: SolverConfig) -> Trajectory:
    return integrate(_rhs_for(dyn, g, X0), X0, _expect(cfg, "predictor"))


def solve_predictor_corrector(dyn: DynLike, g: Optional[Graph], X0, cfg: SolverConfig) -> Trajectory:
    return integrate(_rhs_for(dyn, g, X0), X0, _expect(cfg, "predictor_corrector"))


def solve_short_memory(dyn: DynLike, g: Optional[Graph], X0, cfg: SolverConfig) -> Trajectory:
    """Predictor or predictor-corrector with the history truncated to ``K`` steps."""
    if cfg.memory_window is None:
        raise ValueError("short-memory solve needs cfg.memory_window")
    if cfg.method == "implicit_l1":
        raise ValueError("short memory applies to predictor methods only")
    return integrate(_rhs_for(dyn, g, X0), X0, cfg)


def solve_implicit_l1(dyn: DynLike, g: Optional[Graph], X0, cfg: SolverConfig) -> Trajectory:
    return integrate(_rhs_for(dyn, g, X0), X0, _expect(cfg, "implicit_l1"))


def solve(dyn: DynLike, g: Optional[Graph], X0, cfg: SolverConfig) -> Trajectory:
    """Dispatch on ``cfg.method``."""
    return integrate(_rhs_for(dyn, g, X0), X0, cfg)


# --------------------------------------------------------------------------
# exact solution of the linear problem

def solve_linear_oracle(L: Union[Laplacian, Graph], X0, beta: float, times) -> Trajectory:
    """Eigen-solution of ``D_t^beta X = -L X``.

    ``L`` is similar to the symmetric ``M = I - D^-1/2 W D^-1/2`` through
    ``L = D^1/2 M D^-1/2``, so with ``M = U diag(lam) U^T``::

        X(t) = D^1/2 U diag(E_beta(-lam t^beta)) U^T D^-1/2 X0
    """
    if isinstance(L, Graph):
        L = random_walk_laplacian(L)
    beta = _check_beta(beta)
    X0 = _as_state(X0)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(times < 0):
        raise ValueError("times must be a 1-D array of nonnegative values")

    d = np.asarray(L.degree, dtype=float)
    W = np.asarray(L.transition.toarray()) * d[None, :]
    if not np.allclose(W, W.T, rtol=1e-12, atol=1e-14):
        raise GraphError("linear oracle requires an undirected graph")
    s = np.sqrt(d)
    M = np.eye(len(d)) - W / s[:, None] / s[None, :]
    M = 0.5 * (M + M.T)
    try:
        lam, U = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise GraphError(f"eigendecomposition failed: {exc}") from None
    lam = np.where(np.abs(lam) < 1e-12, 0.0, lam)
    if np.any(lam < 0):
        raise GraphError("Laplacian has a negative eigenvalue")

    left = s[:, None] * U                    # D^1/2 U
    coeff = U.T @ (X0 / s[:, None])          # U^T D^-1/2 X0
    z = -np.outer(times ** beta, lam)        # (T, N)
    E = mittag_leffler_array(beta, z)
    states = np.einsum("ik,tk,kd->tid", left, E, coeff)
    states[times == 0] = X0
    return Trajectory(times, states, {"method": "linear_oracle", "beta": beta})


def with_h(cfg: SolverConfig, h: float) -> SolverConfig:
    return replace(cfg, h=h)
