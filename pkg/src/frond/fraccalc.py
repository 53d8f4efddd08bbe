"""Fractional-calculus primitives.

Memory coefficients of the Grunwald-Letnikov expansion, the one-parameter
Mittag-Leffler function on the nonpositive real axis, and the L1 quadrature
of the Caputo derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

__all__ = [
    "MemoryCoefficients",
    "MittagLefflerEval",
    "memory_coefficients",
    "mittag_leffler",
    "mittag_leffler_array",
    "caputo_l1",
    "gamma",
    "rgamma",
]

SERIES_RADIUS = 5.0
SERIES_RTOL = 1e-8
ASYMPTOTIC_RTOL = 1e-4


def _check_beta(beta: float, *, allow_one: bool = True) -> float:
    beta = float(beta)
    upper_ok = beta <= 1.0 if allow_one else beta < 1.0
    if not (beta > 0.0 and upper_ok):
        interval = "(0, 1]" if allow_one else "(0, 1)"
        raise ValueError(f"beta must lie in {interval}, got {beta}")
    return beta


def gamma(x: float) -> float:
    """Gamma function for real ``x`` outside the poles ``0, -1, -2, ...``."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise ValueError(f"gamma has a pole at {x}")
    return math.gamma(x)


def rgamma(x: float) -> float:
    """Reciprocal gamma, entire: zero at the poles of gamma."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        return 0.0
    if x > 171.0:
        return 0.0
    return 1.0 / math.gamma(x)


# --------------------------------------------------------------------------
# memory coefficients

@dataclass(frozen=True)
class MemoryCoefficients:
    """``c[k-1] = c_k`` for ``k = 1..n`` and ``b[m] = b_m`` for ``m = 0..n``."""

    beta: float
    c: np.ndarray
    b: np.ndarray

    @property
    def n(self) -> int:
        return len(self.c)


def memory_coefficients(beta: float, n: int) -> MemoryCoefficients:
    """Compute ``c_k = |binom(beta, k)|`` and ``b_m = 1 - sum_{k<=m} c_k``.

    Uses the ratio recurrence ``c_{k+1} = c_k (k - beta) / (k + 1)`` so no
    gamma function of a negative argument is ever formed, and a Kahan
    accumulator for the running tail ``b``.
    """
    beta = _check_beta(beta)
    n = int(n)
    if n < 0:
        raise ValueError("n must be nonnegative")
    c = np.empty(n)
    b = np.empty(n + 1)
    b[0] = 1.0
    ck = beta
    acc, comp = 1.0, 0.0
    for k in range(1, n + 1):
        c[k - 1] = ck
        # acc -= ck, compensated
        y = -ck - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
        b[k] = acc
        ck = ck * (k - beta) / (k + 1)
    c.setflags(write=False)
    b.setflags(write=False)
    return MemoryCoefficients(beta, c, b)


# --------------------------------------------------------------------------
# Mittag-Leffler

@dataclass(frozen=True)
class MittagLefflerEval:
    beta: float
    z: float
    value: float
    method_used: str  # "series" | "asymptotic" | "integral" | "closed_form"


def _ml_series(beta: float, z: float) -> tuple[float, float]:
    """Power series with exactly rounded summation.

    Returns the value and an estimate of the absolute rounding error, which
    is dominated by the largest term when the series alternates.
    """
    if z == 0.0:
        return 1.0, 0.0
    lx = math.log(abs(z))
    terms = [1.0]
    biggest = 1.0
    j = 1
    while True:
        log_mag = j * lx - math.lgamma(j * beta + 1.0)
        if log_mag > 40.0:
            # cancellation would swamp any result of order one
            return math.nan, math.inf
        mag = math.exp(log_mag)
        terms.append(mag if (z > 0 or j % 2 == 0) else -mag)
        biggest = max(biggest, mag)
        # terms decay monotonically once j*beta exceeds |z|^(1/beta)
        if mag < 1e-18 * biggest and j * beta > abs(z) ** (1.0 / beta):
            break
        j += 1
        if j > 100000:
            break
    value = math.fsum(terms)
    return value, 4.0 * np.finfo(float).eps * biggest


def _ml_asymptotic(beta: float, x: float) -> tuple[float, float]:
    """``E_beta(-x) ~ sum_{m>=1} (-1)^{m+1} x^{-m} / Gamma(1 - m beta)``,
    truncated just before the smallest-magnitude nonzero term."""
    terms = []
    prev = math.inf
    err = math.inf
    m = 1
    while m < 400:
        r = rgamma(1.0 - m * beta)
        if r != 0.0:
            t = (-1.0) ** (m + 1) * r * x ** (-m)
            if abs(t) >= prev:
                break
            if terms and abs(t) < 1e-300:
                err = abs(t)
                terms.append(t)
                break
            terms.append(t)
            prev = abs(t)
        m += 1
    if len(terms) > 1:
        err = abs(terms.pop())
    return math.fsum(terms), err


def _ml_integral(beta: float, x: float) -> float:
    """Laplace-type integral valid for ``0 < beta < 1`` and ``x >= 0``:

    ``E_beta(-x) = sin(beta pi)/(beta pi) * int_0^inf
    exp(-(s x)^(1/beta)) / (s^2 + 2 s cos(beta pi) + 1) ds``.
    """
    cb = math.cos(beta * math.pi)
    inv = 1.0 / beta

    def f(s):
        return math.exp(-((s * x) ** inv)) / (s * s + 2.0 * s * cb + 1.0)

    cut = 1.0 / x if x > 0 else math.inf
    knots = sorted({1.0, min(cut, 1e6)} if math.isfinite(cut) else {1.0})
    edges = [0.0, *knots]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    total += integrate.quad(f, edges[-1], math.inf, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    return math.sin(beta * math.pi) / (beta * math.pi) * total


def mittag_leffler(beta: float, z: float) -> MittagLefflerEval:
    """One-parameter Mittag-Leffler function ``E_beta(z)`` for real ``z <= 0``.

    Series for ``|z| <= 5``; the algebraic asymptotic expansion beyond.  When
    either route cannot reach its accuracy target (the series suffers
    cancellation for small ``beta``, the asymptotic expansion is too short
    for ``beta`` near one) the Laplace-integral representation is used
    instead.  ``beta == 1`` outside the series disc returns ``exp(z)``.
    """
    beta = _check_beta(beta)
    z = float(z)
    if not math.isfinite(z):
        raise ValueError(f"z must be finite, got {z}")
    if z > 0:
        raise ValueError(f"only z <= 0 is supported, got {z}")
    x = -z

    if x <= SERIES_RADIUS:
        value, err = _ml_series(beta, z)
        if math.isfinite(value) and err <= 1e-2 * SERIES_RTOL * abs(value):
            return MittagLefflerEval(beta, z, value, "series")
        return MittagLefflerEval(beta, z, _ml_integral(beta, x), "integral")

    if beta == 1.0:
        return MittagLefflerEval(beta, z, math.exp(z), "closed_form")
    value, err = _ml_asymptotic(beta, x)
    if value > 0 and err <= 1e-3 * ASYMPTOTIC_RTOL * value:
        return MittagLefflerEval(beta, z, value, "asymptotic")
    return MittagLefflerEval(beta, z, _ml_integral(beta, x), "integral")


def mittag_leffler_array(beta: float, z) -> np.ndarray:
    """Elementwise :func:`mittag_leffler` values for an array of ``z <= 0``."""
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape)
    flat = out.reshape(-1)
    cache: dict[float, float] = {}
    for idx, zi in enumerate(z.reshape(-1)):
        zi = float(zi)
        if zi not in cache:
            cache[zi] = mittag_leffler(beta, zi).value
        flat[idx] = cache[zi]
    return out


# --------------------------------------------------------------------------
# L1 Caputo quadrature

def l1_weights(beta: float, k: int) -> np.ndarray:
    """``R_m = m^(1-beta) - (m-1)^(1-beta)`` for ``m = 1..k``."""
    m = np.arange(1, k + 1, dtype=float)
    a = 1.0 - beta
    return m ** a - (m - 1.0) ** a


def caputo_l1(samples, beta: float, h: float) -> np.ndarray:
    """L1 approximation of the Caputo derivative on a uniform grid.

    ``out[k] = mu * sum_{j<k} R_{k,j} (f_{j+1} - f_j)`` with
    ``mu = 1 / (h^beta Gamma(2 - beta))``.  ``out[0]`` is the empty sum.
    The operation is a discrete convolution of the forward differences with
    the weights ``R``.
    """
    beta = _check_beta(beta, allow_one=False)
    f = np.asarray(samples, dtype=float)
    if f.ndim != 1 or f.size < 2:
        raise ValueError("need at least two samples on a 1-D grid")
    if not h > 0:
        raise ValueError("h must be positive")
    mu = 1.0 / (h ** beta * math.gamma(2.0 - beta))
    diffs = np.diff(f)
    R = l1_weights(beta, diffs.size)
    out = np.zeros_like(f)
    out[1:] = mu * np.convolve(R, diffs)[: diffs.size]
    return out
