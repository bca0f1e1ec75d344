"""Rank transforms, the empirical copula, and finite-threshold TDC estimators.

A :class:`PseudoSample` holds the rank-transformed observations; every
empirical quantity is a pure function of it.  Ranks use the plain empirical
CDF convention rank/n with ties resolved to the maximal rank, so each
coordinate lies in {1/n, ..., 1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.stats import rankdata

from .copulas import DomainError

# chunk size for the O(n^2) orthant-probability pass, keeps memory bounded
_ORTHANT_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class PseudoSample:
    """Rank-transformed observation pairs in (0, 1]^2.

    ``ranks_u``/``ranks_v`` are the integer max-ranks (1-based); the float
    coordinates are ranks / n.  Instances are immutable (identity-compared,
    so they can key caches); derived arrays are cached lazily and shared by
    every estimator.
    """

    ranks_u: np.ndarray
    ranks_v: np.ndarray

    def __post_init__(self):
        if self.ranks_u.shape != self.ranks_v.shape or self.ranks_u.ndim != 1:
            raise DomainError("rank arrays must be 1-d and of equal length")
        if self.n < 2:
            raise DomainError("need at least 2 observations")

    @property
    def n(self) -> int:
        return self.ranks_u.shape[0]

    @cached_property
    def u(self) -> np.ndarray:
        return self.ranks_u / self.n

    @cached_property
    def v(self) -> np.ndarray:
        return self.ranks_v / self.n

    @cached_property
    def diag_counts(self) -> np.ndarray:
        """diag_counts[i-1] = n * C_n(i/n, i/n) for i = 1..n, exact integers."""
        m = np.maximum(self.ranks_u, self.ranks_v)
        hist = np.bincount(m, minlength=self.n + 1)
        return np.cumsum(hist)[1:]

    @cached_property
    def orthant_counts(self) -> np.ndarray:
        """orthant_counts[j] = n * F_n(X_j, Y_j); each point counts itself."""
        n = self.n
        ru, rv = self.ranks_u, self.ranks_v
        out = np.empty(n, dtype=np.int64)
        for lo in range(0, n, _ORTHANT_CHUNK):
            hi = min(lo + _ORTHANT_CHUNK, n)
            block = (ru[None, :] <= ru[lo:hi, None]) & (rv[None, :] <= rv[lo:hi, None])
            out[lo:hi] = block.sum(axis=1)
        return out


def pseudo_sample(x, y) -> PseudoSample:
    """Rank-transform two aligned margins into a PseudoSample."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise DomainError("x and y must be 1-d arrays of equal length")
    if x.shape[0] < 2:
        raise DomainError("need at least 2 observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("observations must be finite")
    ru = rankdata(x, method="max").astype(np.int64)
    rv = rankdata(y, method="max").astype(np.int64)
    return PseudoSample(ru, rv)


def _check_rank(sample: PseudoSample, i: int, *, upper: bool = False) -> int:
    i = int(i)
    hi = sample.n - 1 if upper else sample.n
    if not 1 <= i <= hi:
        raise DomainError(f"threshold rank {i} outside [1, {hi}]")
    return i


def empirical_copula(sample: PseudoSample, u, v):
    """Empirical copula C_n(u, v) = mean of joint rank indicators."""
    ua = np.asarray(u, dtype=float)
    va = np.asarray(v, dtype=float)
    if np.min(ua) < 0.0 or np.max(ua) > 1.0 or np.min(va) < 0.0 or np.max(va) > 1.0:
        raise DomainError("u, v must lie in [0, 1]")
    scalar = ua.ndim == 0 and va.ndim == 0
    ua, va = np.broadcast_arrays(ua, va)
    out = np.empty(ua.shape)
    su, sv = sample.u, sample.v
    for idx in np.ndindex(out.shape):
        out[idx] = np.mean((su <= ua[idx]) & (sv <= va[idx]))
    if scalar:
        return float(out[()])
    return out


def lambda_lower(sample: PseudoSample, i: int) -> float:
    """Lower-tail estimate C_n(i/n, i/n) / (i/n) at rank i."""
    i = _check_rank(sample, i)
    return sample.diag_counts[i - 1] / i


def lambda_upper(sample: PseudoSample, i: int, *, clamp: bool = True) -> float:
    """Upper-tail estimate (1 - 2i/n + C_n(i/n, i/n)) / (1 - i/n) at rank i.

    The raw ratio can stray outside [0, 1] on finite samples; it is clamped
    by default since the target is a probability (see ``lambda_series`` for
    clamp diagnostics).
    """
    i = _check_rank(sample, i, upper=True)
    n = sample.n
    raw = (n - 2 * i + sample.diag_counts[i - 1]) / (n - i)
    if clamp:
        return min(1.0, max(0.0, raw))
    return raw


def lambda_average(sample: PseudoSample, indices, tail: str) -> float:
    """Arithmetic mean of per-rank estimates over a set of threshold ranks."""
    indices = list(indices)
    if not indices:
        raise DomainError("need at least one threshold rank")
    if tail == "lower":
        vals = [lambda_lower(sample, i) for i in indices]
    elif tail == "upper":
        vals = [lambda_upper(sample, i) for i in indices]
    else:
        raise DomainError(f"tail must be 'lower' or 'upper', got {tail!r}")
    return float(np.mean(vals))


def lambda_series(sample: PseudoSample, tail: str):
    """Per-rank estimates for i = 1..n-1 plus the count of upper clamps.

    Rank n is excluded for both tails: the upper denominator vanishes there
    and the lower estimate is identically 1.
    """
    n = sample.n
    i = np.arange(1, n)
    d = sample.diag_counts[:-1]
    if tail == "lower":
        return d / i, 0
    if tail == "upper":
        raw = (n - 2 * i + d) / (n - i)
        clamped = int(np.sum((raw < 0.0) | (raw > 1.0)))
        return np.clip(raw, 0.0, 1.0), clamped
    raise DomainError(f"tail must be 'lower' or 'upper', got {tail!r}")


def joint_orthant_prob(sample: PseudoSample, j: int) -> float:
    """Empirical probability mass of the lower-left orthant of point j (0-based)."""
    if not 0 <= j < sample.n:
        raise DomainError(f"observation index {j} outside [0, {sample.n - 1}]")
    return sample.orthant_counts[j] / sample.n


def extreme_set(sample: PseudoSample, i: int, tail: str) -> np.ndarray:
    """Indices (0-based) of observations in the joint tail at threshold rank i.

    Lower tail: points whose empirical orthant probability is <= the
    empirical copula value at (i/n, i/n); upper tail uses >=.  May be empty
    for the lower tail when that copula value is 0.
    """
    i = _check_rank(sample, i)
    cut = sample.diag_counts[i - 1]
    if tail == "lower":
        return np.nonzero(sample.orthant_counts <= cut)[0]
    if tail == "upper":
        return np.nonzero(sample.orthant_counts >= cut)[0]
    raise DomainError(f"tail must be 'lower' or 'upper', got {tail!r}")
