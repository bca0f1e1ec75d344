"""Asymptotic mean squared error of the empirical TDC estimators.

The variance side rests on two kernels derived from the limiting Gaussian
process of the empirical copula: a variance kernel sigma^2(u) for a single
threshold and a covariance kernel K(u, v) coupling two thresholds.  The bias
side compares the finite-threshold dependence level against its limit, i.e.
delta(a)/a - delta'(0) for the lower tail and the mirrored expression with
delta'(1) for the upper tail.

Closed forms are provided for the Clayton (lower tail) and Gumbel (upper
tail) families; the generic path works for any model that can supply its
diagonal and h-functions (analytically or by finite differences).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .copulas import Copula, DomainError, UnsupportedFamilyError, h_pair

_FD_EPS = 1e-6


class _ClipCounter:
    """Counts negative round-off values clipped to zero in variance terms."""

    def __init__(self):
        self.count = 0

    def clip(self, value: float) -> float:
        if value < 0.0:
            self.count += 1
            return 0.0
        return value

    def reset(self):
        self.count = 0


clip_counter = _ClipCounter()


@dataclass(frozen=True)
class MseDecomposition:
    """Variance / squared-bias split of a TDC estimator at given threshold(s).

    ``alpha`` is a single threshold fraction or a tuple of them for average
    estimators; ``variance`` is the plug-in asymptotic variance already
    divided by the sample size.
    """

    variance: float
    bias_sq: float
    alpha: float | tuple[float, ...]
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.variance) and np.isfinite(self.bias_sq)):
            raise DomainError("MSE components must be finite")
        if self.variance < 0.0 or self.bias_sq < 0.0:
            raise DomainError("MSE components must be nonnegative")

    @property
    def total(self) -> float:
        return self.variance + self.bias_sq


def _h_diag_pair(model: Copula, u: float):
    try:
        h = float(model.h_diag(u))
        return h, h
    except UnsupportedFamilyError:
        return h_pair(model, u)


def _delta_prime_0(model: Copula) -> float:
    """delta'(0), analytic when the family has it, else a right difference.

    The finite-difference fallback evaluates (delta(eps) - 0)/eps at
    eps = 1e-6; for slowly varying diagonals (Student) this carries the
    usual truncation error of the limit, which is documented behaviour.
    """
    try:
        return float(model.diagonal_derivative(0.0))
    except UnsupportedFamilyError:
        return float(model.diagonal(_FD_EPS)) / _FD_EPS


def _delta_prime_1(model: Copula) -> float:
    try:
        return float(model.diagonal_derivative(1.0))
    except UnsupportedFamilyError:
        return (1.0 - float(model.diagonal(1.0 - _FD_EPS))) / _FD_EPS


def variance_kernel(model: Copula, alpha: float) -> float:
    """Asymptotic variance kernel sigma^2(alpha) of the scaled diagonal error.

    sigma^2(a) = d(1-d) + (1-a)[a(h1^2+h2^2) - 2d(h1+h2)] + 2 h1 h2 (d - a^2)
    with d = delta(a).  Negative round-off is clipped at zero (counted in
    ``clip_counter``).
    """
    a = float(alpha)
    if not 0.0 < a < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    d = float(model.diagonal(a))
    h1, h2 = _h_diag_pair(model, a)
    val = (
        d * (1.0 - d)
        + (1.0 - a) * (a * (h1 * h1 + h2 * h2) - 2.0 * d * (h1 + h2))
        + 2.0 * h1 * h2 * (d - a * a)
    )
    return clip_counter.clip(val)


def covariance_kernel(model: Copula, u: float, v: float) -> float:
    """Covariance kernel K(u, v) between diagonal errors at two thresholds.

    Symmetric in (u, v) and equal to sigma^2(u) on the diagonal (routed
    there explicitly so the identity is exact).
    """
    u = float(u)
    v = float(v)
    if not (0.0 < u < 1.0 and 0.0 < v < 1.0):
        raise DomainError("u, v must be in (0, 1)")
    if u == v:
        return variance_kernel(model, u)
    du = float(model.diagonal(u))
    dv = float(model.diagonal(v))
    h1u, h2u = _h_diag_pair(model, u)
    h1v, h2v = _h_diag_pair(model, v)
    w = min(u, v)
    c_wu = float(model.cdf(w, u))
    c_uw = float(model.cdf(u, w))
    c_wv = float(model.cdf(w, v))
    c_vw = float(model.cdf(v, w))
    c_uv = float(model.cdf(u, v))
    c_vu = float(model.cdf(v, u))
    val = (
        float(model.diagonal(w))
        - du * dv
        + (h1u * h1v + h2u * h2v) * (w - u * v)
        - h1v * (c_wu - v * du)
        - h2v * (c_uw - v * du)
        - h1u * (c_wv - u * dv)
        - h2u * (c_vw - u * dv)
        + h1u * h2v * (c_uv - u * v)
        + h1v * h2u * (c_vu - u * v)
    )
    return val


def mse_average(model: Copula, n: int, alphas, tail: str = "lower") -> MseDecomposition:
    """MSE decomposition of the average estimator over several thresholds.

    variance = (1/m^2) sum_{k,l} K(a_k, a_l) w_k w_l / n with weights
    w = 1/a (lower) or 1/(1-a) (upper); the bias averages the per-threshold
    finite-level dependence before comparing against the limit.  A single
    threshold reduces exactly to the plain estimator's decomposition.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    a = np.asarray(list(alphas), dtype=float)
    if a.ndim != 1 or a.size < 1:
        raise DomainError("need at least one threshold fraction")
    if np.any(a <= 0.0) or np.any(a >= 1.0):
        raise DomainError("threshold fractions must be in (0, 1)")
    m = a.size
    diag = np.array([float(model.diagonal(x)) for x in a])
    if tail == "lower":
        w = 1.0 / a
        levels = diag / a
        limit = _delta_prime_0(model)
    elif tail == "upper":
        w = 1.0 / (1.0 - a)
        levels = (1.0 - 2.0 * a + diag) / (1.0 - a)
        limit = 2.0 - _delta_prime_1(model)
    else:
        raise DomainError(f"tail must be 'lower' or 'upper', got {tail!r}")
    acc = 0.0
    for k in range(m):
        acc += variance_kernel(model, a[k]) * w[k] * w[k]
        for l in range(k + 1, m):
            acc += 2.0 * covariance_kernel(model, a[k], a[l]) * w[k] * w[l]
    variance = clip_counter.clip(acc / (m * m) / n)
    bias = float(np.mean(levels)) - limit
    alpha_field = float(a[0]) if m == 1 else tuple(float(x) for x in a)
    return MseDecomposition(variance=variance, bias_sq=bias * bias, alpha=alpha_field, n=int(n))


def mse_lower(model: Copula, n: int, alpha: float) -> MseDecomposition:
    """Theoretical MSE of the lower-tail estimator at threshold fraction alpha."""
    return mse_average(model, n, [alpha], tail="lower")


def mse_upper(model: Copula, n: int, alpha: float) -> MseDecomposition:
    """Theoretical MSE of the upper-tail estimator at threshold fraction alpha."""
    return mse_average(model, n, [alpha], tail="upper")


def mse_lower_clayton(theta: float, n: int, alpha) -> MseDecomposition:
    """Closed-form lower-tail MSE for the Clayton family.

    Vectorised over ``alpha``; scalar input returns a decomposition, array
    input returns (variance, bias_sq) arrays for grid sweeps.
    """
    if not theta > 0.0:
        raise DomainError(f"Clayton requires theta > 0, got {theta}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    a = np.asarray(alpha, dtype=float)
    if np.any(a <= 0.0) or np.any(a >= 1.0):
        raise DomainError("alpha must be in (0, 1)")
    at = a**theta
    d = (2.0 * a ** (-theta) - 1.0) ** (-1.0 / theta)
    denom = (2.0 - at) ** 2
    bracket = (
        d
        - d * d * (1.0 + 2.0 * (2.0 * (1.0 - a) * (1.0 - at) + 1.0) / (a * denom))
        + 2.0 * d**3 / (a * a * denom)
    )
    variance = bracket / (n * a * a)
    bias = (2.0 - at) ** (-1.0 / theta) - 2.0 ** (-1.0 / theta)
    if a.ndim == 0:
        return MseDecomposition(
            variance=clip_counter.clip(float(variance)),
            bias_sq=float(bias * bias),
            alpha=float(a),
            n=int(n),
        )
    return np.maximum(variance, 0.0), bias * bias


def mse_upper_gumbel(theta: float, n: int, alpha) -> MseDecomposition:
    """Closed-form upper-tail MSE for the Gumbel family (vectorised like above)."""
    if not theta > 1.0:
        raise DomainError(f"Gumbel requires theta > 1, got {theta}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    a = np.asarray(alpha, dtype=float)
    if np.any(a <= 0.0) or np.any(a >= 1.0):
        raise DomainError("alpha must be in (0, 1)")
    p = 2.0 ** (1.0 / theta)
    d = a**p
    bracket = (
        d * (1.0 - d)
        + d * d * (1.0 / a - 1.0) * p * (p / 2.0 - 2.0)
        + d * d * (p * p / 2.0) * (d / (a * a) - 1.0)
    )
    variance = bracket / (n * (1.0 - a) ** 2)
    bias = (1.0 - 2.0 * a + d) / (1.0 - a) - 2.0 + p
    if a.ndim == 0:
        return MseDecomposition(
            variance=clip_counter.clip(float(variance)),
            bias_sq=float(bias * bias),
            alpha=float(a),
            n=int(n),
        )
    return np.maximum(variance, 0.0), bias * bias


def threshold_correlation(model: Copula, n: int, i: int, j: int) -> float:
    """Asymptotic correlation between estimates at threshold ranks i and j."""
    i, j = int(i), int(j)
    if not (1 <= i <= n - 1 and 1 <= j <= n - 1):
        raise DomainError("ranks must lie in [1, n-1]")
    if i == j:
        return 1.0
    u, v = i / n, j / n
    su = variance_kernel(model, u)
    sv = variance_kernel(model, v)
    if su <= 0.0 or sv <= 0.0:
        raise DomainError("variance kernel vanishes; correlation undefined")
    rho = covariance_kernel(model, u, v) / math.sqrt(su * sv)
    if abs(rho) > 1.0 + 1e-9:
        raise DomainError(f"correlation {rho} outside [-1, 1]")
    return rho
