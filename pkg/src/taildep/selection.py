"""Threshold selection for the empirical TDC estimators.

Implements the benchmark methods used throughout the package:

  fixed1pct / fixed2pct  -- arbitrary tail-probability thresholds
  mle                    -- full-sample pseudo maximum likelihood, no threshold
  plateau                -- plateau-finding on the smoothed estimate series
  plugin                 -- threshold minimising the plug-in theoretical MSE,
                            with the tail copula calibrated by censored
                            likelihood at the same threshold
  twostep                -- fixed-point variant matching the calibrated
                            parameter against the MSE-optimal threshold map
  avg_minavg / avg_joint -- interval versions returning an averaged estimate

All selectors are deterministic functions of (sample, arguments): no hidden
randomness, stable tie-breaks (toward the more extreme threshold).
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from . import mse as _mse
from .copulas import Clayton, Copula, DomainError, Gumbel, TailDepError
from .empirical import PseudoSample, lambda_average, lambda_lower, lambda_series, lambda_upper


class DegenerateLikelihoodError(TailDepError):
    """The censored likelihood cannot identify the parameter (tail too empty)."""


class ThresholdRangeError(DomainError):
    """Requested threshold fraction is outside the attainable range of the map."""

    def __init__(self, u, lo, hi):
        super().__init__(
            f"threshold fraction {u:.6g} outside attainable range [{lo:.6g}, {hi:.6g}]"
        )
        self.range = (lo, hi)


METHODS = (
    "fixed1pct",
    "fixed2pct",
    "mle",
    "plateau",
    "plugin",
    "twostep",
    "avg_minavg",
    "avg_joint",
)

METHOD_ALIASES = {"1": "fixed1pct", "2": "fixed2pct", "3": "mle", "4": "plateau",
                  "5": "plugin", "6": "twostep"}

THETA_DOMAIN = {"clayton": (1e-3, 50.0), "gumbel": (1.0 + 1e-6, 50.0)}

_MIN_EXTREME_DEFAULT = 5


@dataclass
class SelectionResult:
    """Outcome of one selection method on one sample."""

    method: str
    tail: str
    estimate: float
    threshold: int | tuple[int, int] | None = None
    theta_hat: float | None = None
    diagnostics: dict = field(default_factory=dict)


def _check_tail(tail):
    if tail not in ("lower", "upper"):
        raise DomainError(f"tail must be 'lower' or 'upper', got {tail!r}")
    return tail


def _check_family(family):
    fam = str(family).lower()
    if fam not in THETA_DOMAIN:
        raise DomainError(f"family must be 'clayton' or 'gumbel', got {family!r}")
    return fam


# ---------------------------------------------------------------------------
# plateau-finding
# ---------------------------------------------------------------------------

def plateau_params(length: int) -> tuple[int, int]:
    """Box-kernel bandwidth b and plateau length m for a series of given length."""
    b = length // 200
    smoothed = length - 2 * b
    if smoothed < 1:
        raise DomainError("series too short for the box kernel")
    return b, int(math.isqrt(smoothed))


def plateau_estimate(series, tail: str) -> SelectionResult:
    """Plateau-finding on a threshold-indexed series of TDC estimates.

    The series is smoothed by a moving average over 2b+1 points, then the
    first window of m consecutive smoothed values whose deviations from the
    window head sum to at most twice the standard deviation of the smoothed
    series is averaged.  The scan runs upward from the start for the lower
    tail and downward from the end for the upper tail.  Without any
    qualifying window the estimate is exactly 0.
    """
    _check_tail(tail)
    series = np.asarray(series, dtype=float)
    if series.ndim != 1:
        raise DomainError("series must be 1-d")
    length = series.shape[0]
    b, m = plateau_params(length)
    if length < 2 * b + 1:
        raise DomainError("series shorter than the smoothing window")
    if b > 0:
        kernel = np.full(2 * b + 1, 1.0 / (2 * b + 1))
        smoothed = np.convolve(series, kernel, mode="valid")
    else:
        smoothed = series
    sigma = float(np.std(smoothed))  # population form
    n_windows = smoothed.shape[0] - m + 1
    if n_windows < 1:
        raise DomainError("smoothed series shorter than the plateau length")
    starts = range(n_windows) if tail == "lower" else range(n_windows - 1, -1, -1)
    for k in starts:
        window = smoothed[k : k + m]
        if np.sum(np.abs(window[1:] - window[0])) <= 2.0 * sigma:
            return SelectionResult(
                method="plateau",
                tail=tail,
                estimate=float(np.mean(window)),
                threshold=(k + 1, k + m),
                diagnostics={"bandwidth": b, "m": m, "sigma": sigma, "found": True},
            )
    return SelectionResult(
        method="plateau",
        tail=tail,
        estimate=0.0,
        threshold=None,
        diagnostics={"bandwidth": b, "m": m, "sigma": sigma, "found": False},
    )


# ---------------------------------------------------------------------------
# censored likelihood and parameter calibration
# ---------------------------------------------------------------------------

class _LikelihoodArrays:
    """Per-sample precomputation shared by all censored-likelihood calls.

    Observations are ordered by their empirical orthant probability so the
    extreme set at any threshold is a prefix (lower tail) or suffix (upper
    tail).  Coordinates with maximal rank are pulled from 1 to n/(n+1) for
    density evaluation only: the density of a tail-dependent family can
    vanish on the boundary and the rank atoms at 1 are a finite-sample
    artefact, not evidence.
    """

    def __init__(self, sample: PseudoSample):
        n = sample.n
        order = np.argsort(sample.orthant_counts, kind="stable")
        self.n = n
        self.f_sorted = sample.orthant_counts[order]
        shrink = n / (n + 1.0)
        ue = np.where(sample.ranks_u[order] == n, shrink, sample.ranks_u[order] / n)
        ve = np.where(sample.ranks_v[order] == n, shrink, sample.ranks_v[order] / n)
        self.lu = np.log(ue)
        self.lv = np.log(ve)
        self.lx = np.log(-self.lu)
        self.ly = np.log(-self.lv)
        # prefix sums for O(1) slice totals (leading zero entry)
        self.cs_luv = np.concatenate([[0.0], np.cumsum(self.lu + self.lv)])
        self.cs_lxy = np.concatenate([[0.0], np.cumsum(self.lx + self.ly)])

    def extreme_slice(self, cut_count: int, tail: str) -> slice:
        if tail == "lower":
            k = int(np.searchsorted(self.f_sorted, cut_count, side="right"))
            return slice(0, k)
        k = int(np.searchsorted(self.f_sorted, cut_count, side="left"))
        return slice(k, self.n)

    def log_density_sum(self, family: str, theta: float, sl: slice) -> float:
        count = sl.stop - sl.start
        if count == 0:
            return 0.0
        lu = self.lu[sl]
        lv = self.lv[sl]
        if family == "clayton":
            inner = np.exp(-theta * lu) + np.exp(-theta * lv) - 1.0
            total = (
                count * math.log1p(theta)
                - (theta + 1.0) * (self.cs_luv[sl.stop] - self.cs_luv[sl.start])
                - (1.0 / theta + 2.0) * float(np.sum(np.log(inner)))
            )
        else:  # gumbel
            s = np.exp(theta * self.lx[sl]) + np.exp(theta * self.ly[sl])
            srt = s ** (1.0 / theta)
            total = float(
                np.sum(-srt + (1.0 / theta - 2.0) * np.log(s) + np.log(srt + theta - 1.0))
            )
            total += (theta - 1.0) * (self.cs_lxy[sl.stop] - self.cs_lxy[sl.start])
            total -= self.cs_luv[sl.stop] - self.cs_luv[sl.start]
        if not np.isfinite(total):
            return -np.inf
        return total


_lik_cache: "weakref.WeakKeyDictionary[PseudoSample, _LikelihoodArrays]" = (
    weakref.WeakKeyDictionary()
)


def _lik_arrays(sample: PseudoSample) -> _LikelihoodArrays:
    arrays = _lik_cache.get(sample)
    if arrays is None:
        arrays = _LikelihoodArrays(sample)
        _lik_cache[sample] = arrays
    return arrays


def _kendall_value(family, theta, p, kendall_variant):
    if p <= 0.0:
        return 0.0
    if family == "clayton":
        return float(Clayton(theta, kendall_variant=kendall_variant).kendall(p))
    return float(Gumbel(theta).kendall(p))


def censored_loglik(sample: PseudoSample, i: int, tail: str, family: str,
                    theta: float, *, kendall_variant: str = "standard") -> float:
    """Censored pseudo log-likelihood of a tail copula at threshold rank i.

    Extreme observations (per the orthant-quantile tail set) contribute the
    log copula density at their pseudo-coordinates; every other observation
    contributes the log probability mass of the censored region, expressed
    through the Kendall function at the empirical copula value of the cut.
    Returns -inf when the likelihood degenerates (zero density at an extreme
    point or a censored term with zero mass).
    """
    _check_tail(tail)
    family = _check_family(family)
    lo, hi = THETA_DOMAIN[family]
    if not lo <= theta <= hi:
        raise DomainError(f"theta {theta} outside {family} domain [{lo}, {hi}]")
    arrays = _lik_arrays(sample)
    n = sample.n
    i = int(i)
    if not 1 <= i <= n:
        raise DomainError(f"threshold rank {i} outside [1, {n}]")
    cut_count = int(sample.diag_counts[i - 1])
    sl = arrays.extreme_slice(cut_count, tail)
    total = arrays.log_density_sum(family, theta, sl)
    n_censored = n - (sl.stop - sl.start)
    if n_censored > 0:
        kendall = _kendall_value(family, theta, cut_count / n, kendall_variant)
        if tail == "lower":
            mass = 1.0 - kendall
        else:
            mass = kendall
        if mass <= 0.0:
            return -np.inf
        total += n_censored * math.log(mass)
    return float(total)


def _golden_max(f, zlo: float, zhi: float, hint: float | None = None,
                theta_tol: float = 1e-6, coarse: int = 24):
    """Maximise f over [zlo, zhi] in log-parameter space by golden section.

    Starts from a bracket around ``hint`` when given (expanding it until the
    interior dominates the ends) and from a coarse scan otherwise.
    """
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0

    def bracket_from_hint(z0):
        half = 0.35
        lo = max(zlo, z0 - half)
        hi = min(zhi, z0 + half)
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            fl, fm, fh = f(lo), f(mid), f(hi)
            if fm >= fl and fm >= fh:
                return lo, hi
            if fl > fh:
                if lo <= zlo:
                    return lo, hi
                lo = max(zlo, lo - (hi - lo))
            else:
                if hi >= zhi:
                    return lo, hi
                hi = min(zhi, hi + (hi - lo))
        return lo, hi

    if hint is not None:
        lo, hi = bracket_from_hint(min(max(hint, zlo), zhi))
    else:
        zs = np.linspace(zlo, zhi, coarse)
        vals = [f(z) for z in zs]
        best = int(np.argmax(vals))
        lo = zs[max(best - 1, 0)]
        hi = zs[min(best + 1, coarse - 1)]

    c = hi - inv_phi * (hi - lo)
    d = lo + inv_phi * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(200):
        if math.exp(hi) - math.exp(lo) <= theta_tol:
            break
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - inv_phi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv_phi * (hi - lo)
            fd = f(d)
    z = c if fc >= fd else d
    return z, max(fc, fd)


def calibrate_theta(sample: PseudoSample, i: int, tail: str, family: str, *,
                    min_extreme: int = _MIN_EXTREME_DEFAULT,
                    hint: float | None = None,
                    kendall_variant: str = "standard") -> float:
    """Censored-likelihood estimate of the tail copula parameter at rank i.

    Maximises :func:`censored_loglik` over the family's parameter domain by
    golden section on the log parameter (tolerance 1e-6 in theta).  Raises
    :class:`DegenerateLikelihoodError` when fewer than ``min_extreme``
    observations fall in the tail set, where the parameter is weakly
    identified.
    """
    _check_tail(tail)
    family = _check_family(family)
    arrays = _lik_arrays(sample)
    cut_count = int(sample.diag_counts[int(i) - 1])
    sl = arrays.extreme_slice(cut_count, tail)
    if sl.stop - sl.start < min_extreme:
        raise DegenerateLikelihoodError(
            f"only {sl.stop - sl.start} extreme observations at rank {i} "
            f"(need {min_extreme})"
        )
    lo, hi = THETA_DOMAIN[family]

    def objective(z):
        return censored_loglik(sample, i, tail, family, math.exp(z),
                               kendall_variant=kendall_variant)

    z, _ = _golden_max(objective, math.log(lo), math.log(hi),
                       hint=None if hint is None else math.log(hint))
    return math.exp(z)


def pseudo_mle(sample: PseudoSample, family: str) -> float:
    """Full-sample pseudo maximum likelihood estimate of the family parameter."""
    family = _check_family(family)
    arrays = _lik_arrays(sample)
    full = slice(0, sample.n)
    lo, hi = THETA_DOMAIN[family]

    def objective(z):
        return arrays.log_density_sum(family, math.exp(z), full)

    z, _ = _golden_max(objective, math.log(lo), math.log(hi))
    return math.exp(z)


# ---------------------------------------------------------------------------
# plug-in MSE maps
# ---------------------------------------------------------------------------

def default_grid(n: int, tail: str) -> np.ndarray:
    """Default search ranks: the tail half of [1, n], trimmed at both ends.

    The extreme end is cut where the censored fit degenerates (a couple of
    ranks) and the bulk end at the median, keeping the plug-in family a tail
    model; both bounds can be overridden by passing an explicit grid.
    """
    _check_tail(tail)
    if tail == "lower":
        lo = max(2, math.ceil(0.002 * n))
        hi = n // 2
    else:
        lo = math.ceil(0.5 * n)
        hi = n - 2
    if lo > hi:
        raise DomainError(f"sample too small for a {tail}-tail search grid")
    return np.arange(lo, hi + 1)


def _model_for(family: str, theta: float) -> Copula:
    return Clayton(theta) if family == "clayton" else Gumbel(theta)


def mse_totals(family: str, theta: float, n: int, ranks, tail: str) -> np.ndarray:
    """Total plug-in MSE at each rank of ``ranks`` for the given tail copula.

    Uses the closed forms for the canonical pairings (Clayton/lower,
    Gumbel/upper) and the generic kernel path otherwise.
    """
    family = _check_family(family)
    _check_tail(tail)
    ranks = np.asarray(ranks, dtype=np.int64)
    alphas = ranks / n
    if family == "clayton" and tail == "lower":
        variance, bias_sq = _mse.mse_lower_clayton(theta, n, alphas)
        return variance + bias_sq
    if family == "gumbel" and tail == "upper":
        variance, bias_sq = _mse.mse_upper_gumbel(theta, n, alphas)
        return variance + bias_sq
    model = _model_for(family, theta)
    return np.array([_mse.mse_average(model, n, [a], tail=tail).total for a in alphas])


def average_mse_totals(family: str, theta: float, n: int, ranks, m: int,
                       tail: str) -> np.ndarray:
    """Total MSE of the averaged estimator for every start of an m-window.

    ``ranks`` must be a contiguous rank range; the result has one entry per
    window start (length len(ranks) - m + 1).  m = 1 reduces to
    :func:`mse_totals` exactly.
    """
    family = _check_family(family)
    _check_tail(tail)
    ranks = np.asarray(ranks, dtype=np.int64)
    if m < 1 or m > ranks.size:
        raise DomainError(f"window length {m} outside [1, {ranks.size}]")
    if ranks.size > 1 and not np.all(np.diff(ranks) == 1):
        raise DomainError("ranks must be contiguous for window averaging")
    if m == 1:
        return mse_totals(family, theta, n, ranks, tail)
    model = _model_for(family, theta)
    a = ranks / n
    diag = np.asarray(model.diagonal(a))
    h = np.asarray(model.h_diag(a))
    if tail == "lower":
        w = 1.0 / a
        levels = diag / a
        limit = float(model.diagonal_derivative(0.0))
    else:
        w = 1.0 / (1.0 - a)
        levels = (1.0 - 2.0 * a + diag) / (1.0 - a)
        limit = 2.0 - float(model.diagonal_derivative(1.0))
    # banded covariance kernel: windows only couple ranks within distance m
    sig2 = (
        diag * (1.0 - diag)
        + (1.0 - a) * (a * 2.0 * h * h - 2.0 * diag * 2.0 * h)
        + 2.0 * h * h * (diag - a * a)
    )
    var_sum = np.convolve(sig2 * w * w, np.ones(m), mode="valid")
    for d in range(1, m):
        u1, u2 = a[:-d], a[d:]
        d1, d2 = diag[:-d], diag[d:]
        h1, h2 = h[:-d], h[d:]
        c12 = np.asarray(model.cdf(u1, u2))
        # symmetric-family form of the cross kernel, u1 < u2 elementwise
        kd = (
            d1
            - d1 * d2
            + 2.0 * h1 * h2 * (u1 - u1 * u2)
            - 2.0 * h2 * d1 * (1.0 - u2)
            - 2.0 * h1 * (c12 - u1 * d2)
            + 2.0 * h1 * h2 * (c12 - u1 * u2)
        )
        band = 2.0 * kd * w[:-d] * w[d:]
        var_sum += np.convolve(band, np.ones(m - d), mode="valid")
    variance = np.maximum(var_sum / (m * m) / n, 0.0)
    bias = np.convolve(levels, np.full(m, 1.0 / m), mode="valid") - limit
    return variance + bias * bias


def _argmin_extreme(values: np.ndarray, tail: str) -> int:
    """Index of the minimum, ties broken toward the more extreme threshold."""
    if tail == "lower":
        return int(np.argmin(values))
    rev = values[::-1]
    return values.shape[0] - 1 - int(np.argmin(rev))


def optimal_threshold(family: str, theta: float, n: int, tail: str, *,
                      m: int = 1, grid=None) -> float:
    """MSE-minimising threshold fraction for a known tail copula parameter.

    For m > 1 the value is the start of the best m-window of consecutive
    ranks.  Deterministic grid argmin; ties go to the more extreme rank.
    """
    ranks = default_grid(n, tail) if grid is None else np.asarray(grid, dtype=np.int64)
    totals = average_mse_totals(family, theta, n, ranks, m, tail)
    starts = ranks[: totals.shape[0]]
    k = _argmin_extreme(totals, tail)
    return float(starts[k]) / n


@lru_cache(maxsize=64)
def _threshold_table(family: str, n: int, tail: str, m: int):
    """Cached monotone table of optimal_threshold over a log-spaced theta grid."""
    if family == "clayton":
        thetas = np.geomspace(1e-3, 50.0, 60)
    else:
        thetas = 1.0 + np.geomspace(1e-6, 49.0, 60)
    phi = np.array([optimal_threshold(family, t, n, tail, m=m) for t in thetas])
    increasing = phi[-1] >= phi[0]
    # isotonic pass: clamp stray non-monotone wiggles before inversion
    repaired = np.maximum.accumulate(phi) if increasing else np.minimum.accumulate(phi)
    return thetas, repaired, increasing


def optimal_threshold_inverse(family: str, u: float, n: int, tail: str, *,
                              m: int = 1, theta_tol: float = 1e-4) -> float:
    """Generalized inverse of the optimal-threshold map at fraction u.

    Returns the smallest parameter whose optimal threshold reaches u
    (crosses from the appropriate side for decreasing maps).  Raises
    :class:`ThresholdRangeError` when u is outside the attainable range.
    """
    family = _check_family(family)
    _check_tail(tail)
    thetas, phi, increasing = _threshold_table(family, n, tail, m)
    lo_val, hi_val = float(np.min(phi)), float(np.max(phi))
    if not lo_val <= u <= hi_val:
        raise ThresholdRangeError(u, lo_val, hi_val)

    def reaches(theta):
        val = optimal_threshold(family, theta, n, tail, m=m)
        return val >= u if increasing else val <= u

    hits = (phi >= u) if increasing else (phi <= u)
    idx = int(np.argmax(hits))  # first grid point reaching u
    t_hi = thetas[idx]
    t_lo = thetas[max(idx - 1, 0)]
    if not reaches(t_hi):
        return float(t_hi)  # table plateau; best attainable grid point
    while t_hi - t_lo > theta_tol:
        mid = 0.5 * (t_lo + t_hi)
        if reaches(mid):
            t_hi = mid
        else:
            t_lo = mid
    return float(t_hi)


# ---------------------------------------------------------------------------
# selectors
# ---------------------------------------------------------------------------

def _estimate_at(sample: PseudoSample, rank: int, tail: str):
    if tail == "lower":
        return lambda_lower(sample, rank), False
    raw = lambda_upper(sample, rank, clamp=False)
    return min(1.0, max(0.0, raw)), not 0.0 <= raw <= 1.0


def _psi_curve(sample, tail, family, ranks, min_extreme, psi_fn):
    """Calibrated parameter and plug-in MSE total per rank; NaN where degenerate."""
    n = sample.n
    thetas = np.full(ranks.shape, np.nan)
    totals = np.full(ranks.shape, np.nan)
    hint = None
    # walk from the data-rich bulk end toward the extreme end so the warm
    # starts for the likelihood maximiser come from well-identified fits
    order = range(ranks.shape[0] - 1, -1, -1) if tail == "lower" else range(ranks.shape[0])
    for k in order:
        try:
            if psi_fn is not None:
                theta = float(psi_fn(sample, int(ranks[k]), tail, family))
            else:
                theta = calibrate_theta(sample, int(ranks[k]), tail, family,
                                        min_extreme=min_extreme, hint=hint)
        except DegenerateLikelihoodError:
            continue
        thetas[k] = theta
        totals[k] = mse_totals(family, theta, n, ranks[k : k + 1], tail)[0]
        hint = theta
    return thetas, totals


def select_simple_plugin(sample: PseudoSample, tail: str, family: str, *,
                         grid=None, min_extreme: int = _MIN_EXTREME_DEFAULT,
                         psi_fn=None) -> SelectionResult:
    """Plug-in selection: argmin over ranks of the estimated theoretical MSE.

    At each candidate rank the tail copula parameter is calibrated by
    censored likelihood at that same rank, the closed-form MSE is evaluated
    there, and the rank with the smallest estimate wins.  Degenerate
    candidates are skipped (never silently: they are counted in the
    diagnostics); if everything degenerates an error is raised.
    """
    _check_tail(tail)
    family = _check_family(family)
    ranks = default_grid(sample.n, tail) if grid is None else np.asarray(grid, np.int64)
    thetas, totals = _psi_curve(sample, tail, family, ranks, min_extreme, psi_fn)
    ok = np.isfinite(totals)
    if not np.any(ok):
        raise DegenerateLikelihoodError("all candidate thresholds degenerate")
    masked = np.where(ok, totals, np.inf)
    k = _argmin_extreme(masked, tail)
    rank = int(ranks[k])
    estimate, clamped = _estimate_at(sample, rank, tail)
    return SelectionResult(
        method="plugin",
        tail=tail,
        estimate=estimate,
        threshold=rank,
        theta_hat=float(thetas[k]),
        diagnostics={
            "ranks": ranks,
            "mse_curve": totals,
            "theta_curve": thetas,
            "skipped": int(np.sum(~ok)),
            "clamped": clamped,
        },
    )


def _crossing_select(sample, tail, family, m, min_extreme, psi_fn):
    """Shared fixed-point machinery for twostep (m=1) and avg_joint (m>1).

    Minimises the squared gap between the calibrated parameter (averaged
    over the m-window for m > 1) and the inverse optimal-threshold map, by
    Nelder-Mead over a real-valued relaxation of the window start plus a
    local integer sweep.
    """
    n = sample.n
    ranks = default_grid(n, tail)
    starts = ranks[: ranks.shape[0] - m + 1]
    if starts.size < 1:
        raise DomainError(f"window length {m} does not fit in the search grid")
    lo, hi = int(starts[0]), int(starts[-1])

    psi_cache: dict[int, float] = {}

    def psi_at(rank):
        if rank not in psi_cache:
            try:
                if psi_fn is not None:
                    psi_cache[rank] = float(psi_fn(sample, rank, tail, family))
                else:
                    psi_cache[rank] = calibrate_theta(
                        sample, rank, tail, family, min_extreme=min_extreme
                    )
            except DegenerateLikelihoodError:
                psi_cache[rank] = math.nan
        return psi_cache[rank]

    obj_cache: dict[int, float] = {}
    inversion_failures = 0

    def objective(start):
        nonlocal inversion_failures
        start = int(min(max(start, lo), hi))
        if start in obj_cache:
            return obj_cache[start]
        members = [psi_at(r) for r in range(start, start + m)]
        if any(math.isnan(t) for t in members):
            val = math.inf
        else:
            theta_bar = float(np.mean(members))
            try:
                theta_map = optimal_threshold_inverse(family, start / n, n, tail, m=m)
                val = (theta_bar - theta_map) ** 2
            except ThresholdRangeError:
                inversion_failures += 1
                val = math.inf
        obj_cache[start] = val
        return val

    # coarse pass guards Nelder-Mead against flat regions of the rounded objective
    coarse = np.unique(np.linspace(lo, hi, 32).round().astype(int))
    for s in coarse:
        objective(s)
    finite = [s for s, v in obj_cache.items() if math.isfinite(v)]
    if tail == "lower":
        nm_starts = [0.02 * n, 0.10 * n]
    else:
        nm_starts = [0.90 * n, 0.98 * n]
    if finite:
        nm_starts.append(min(finite, key=lambda s: (obj_cache[s], s)))
    for x0 in nm_starts:
        minimize(
            lambda x: objective(x[0]),
            x0=[float(min(max(x0, lo), hi))],
            method="Nelder-Mead",
            options={"xatol": 0.5, "fatol": 0.0, "maxiter": 80},
        )
    finite = [s for s, v in obj_cache.items() if math.isfinite(v)]
    if not finite:
        return None, {"inversion_failures": inversion_failures}
    best = min(finite, key=lambda s: (obj_cache[s], s))
    for s in range(best - 3, best + 4):
        if lo <= s <= hi:
            objective(s)
    finite = [s for s, v in obj_cache.items() if math.isfinite(v)]
    best = min(finite, key=lambda s: (obj_cache[s], s))
    if tail == "upper":  # tie toward the extreme (largest) start
        best_val = obj_cache[best]
        best = max(s for s in finite if obj_cache[s] == best_val)
    diag = {
        "objective": {s: obj_cache[s] for s in sorted(obj_cache)},
        "inversion_failures": inversion_failures,
    }
    members = [psi_at(r) for r in range(best, best + m)]
    return (best, float(np.mean(members))), diag


def select_two_step(sample: PseudoSample, tail: str, family: str, *,
                    min_extreme: int = _MIN_EXTREME_DEFAULT,
                    psi_fn=None) -> SelectionResult:
    """Two-step plug-in: solve the fixed point between calibration and map.

    Falls back to the simple plug-in result (flagged in the diagnostics)
    when every candidate start is degenerate or uninvertible.
    """
    _check_tail(tail)
    family = _check_family(family)
    picked, diag = _crossing_select(sample, tail, family, 1, min_extreme, psi_fn)
    if picked is None:
        result = select_simple_plugin(sample, tail, family,
                                      min_extreme=min_extreme, psi_fn=psi_fn)
        result.method = "twostep"
        result.diagnostics["fallback"] = "plugin"
        result.diagnostics.update(diag)
        return result
    rank, theta_hat = picked
    estimate, clamped = _estimate_at(sample, rank, tail)
    diag["clamped"] = clamped
    return SelectionResult(
        method="twostep",
        tail=tail,
        estimate=estimate,
        threshold=rank,
        theta_hat=theta_hat,
        diagnostics=diag,
    )


def _default_m(sample: PseudoSample) -> int:
    return plateau_params(sample.n - 1)[1]


def select_average_minavg(sample: PseudoSample, tail: str, family: str, *,
                          m: int | None = None,
                          min_extreme: int = _MIN_EXTREME_DEFAULT,
                          psi_fn=None) -> SelectionResult:
    """Interval selection minimising the average of per-rank plug-in MSEs.

    Windows containing any degenerate rank are skipped.  With m = 1 this is
    the simple plug-in selector evaluated through the identical code path.
    """
    _check_tail(tail)
    family = _check_family(family)
    if m is None:
        m = _default_m(sample)
    ranks = default_grid(sample.n, tail)
    if m < 1 or m > ranks.size:
        raise DomainError(f"window length {m} outside [1, {ranks.size}]")
    thetas, totals = _psi_curve(sample, tail, family, ranks, min_extreme, psi_fn)
    window_means = np.convolve(np.where(np.isfinite(totals), totals, np.nan),
                               np.full(m, 1.0 / m), mode="valid")
    ok = np.isfinite(window_means)
    if not np.any(ok):
        raise DegenerateLikelihoodError("all candidate windows degenerate")
    starts = ranks[: window_means.shape[0]]
    masked = np.where(ok, window_means, np.inf)
    k = _argmin_extreme(masked, tail)
    start = int(starts[k])
    interval = list(range(start, start + m))
    estimate = lambda_average(sample, interval, tail)
    return SelectionResult(
        method="avg_minavg",
        tail=tail,
        estimate=estimate,
        threshold=(start, start + m - 1),
        theta_hat=float(np.nanmean(thetas[k : k + m])),
        diagnostics={
            "ranks": ranks,
            "mse_curve": totals,
            "window_means": window_means,
            "m": m,
            "skipped": int(np.sum(~np.isfinite(totals))),
        },
    )


def select_average_joint(sample: PseudoSample, tail: str, family: str, *,
                         m: int | None = None,
                         min_extreme: int = _MIN_EXTREME_DEFAULT,
                         psi_fn=None) -> SelectionResult:
    """Interval selection via the fixed point of the averaged maps.

    The window-averaged calibrated parameter plays the role of the
    calibration map and the MSE of the averaged estimator defines the
    optimal-start map; the crossing logic of the two-step selector is reused
    on window starts.  m = 1 reduces exactly to the two-step selector.
    """
    _check_tail(tail)
    family = _check_family(family)
    if m is None:
        m = _default_m(sample)
    picked, diag = _crossing_select(sample, tail, family, m, min_extreme, psi_fn)
    if picked is None:
        result = select_average_minavg(sample, tail, family, m=m,
                                       min_extreme=min_extreme, psi_fn=psi_fn)
        result.method = "avg_joint"
        result.diagnostics["fallback"] = "avg_minavg"
        result.diagnostics.update(diag)
        return result
    start, theta_hat = picked
    interval = list(range(start, start + m))
    estimate = lambda_average(sample, interval, tail)
    diag["m"] = m
    return SelectionResult(
        method="avg_joint",
        tail=tail,
        estimate=estimate,
        threshold=(start, start + m - 1),
        theta_hat=theta_hat,
        diagnostics=diag,
    )


def select_fixed(sample: PseudoSample, tail: str, tail_prob: float) -> SelectionResult:
    """Arbitrary threshold at a fixed tail probability (e.g. 0.01 or 0.02)."""
    _check_tail(tail)
    if not 0.0 < tail_prob < 0.5:
        raise DomainError(f"tail probability must be in (0, 0.5), got {tail_prob}")
    n = sample.n
    if tail == "lower":
        rank = max(1, round(tail_prob * n))
    else:
        rank = min(n - 1, round((1.0 - tail_prob) * n))
    estimate, clamped = _estimate_at(sample, rank, tail)
    method = "fixed1pct" if abs(tail_prob - 0.01) < 1e-12 else "fixed2pct"
    return SelectionResult(
        method=method,
        tail=tail,
        estimate=estimate,
        threshold=rank,
        diagnostics={"tail_prob": tail_prob, "clamped": clamped},
    )


def select_mle(sample: PseudoSample, tail: str, family: str) -> SelectionResult:
    """Full-sample pseudo-MLE of the family, converted to its closed-form TDC."""
    _check_tail(tail)
    family = _check_family(family)
    theta = pseudo_mle(sample, family)
    model = _model_for(family, theta)
    estimate = model.tdc_lower() if tail == "lower" else model.tdc_upper()
    return SelectionResult(
        method="mle",
        tail=tail,
        estimate=float(estimate),
        threshold=None,
        theta_hat=theta,
    )


def estimate_method(sample: PseudoSample, tail: str, method: str, *,
                    family: str | None = None, m: int | None = None,
                    min_extreme: int = _MIN_EXTREME_DEFAULT) -> SelectionResult:
    """Dispatch a method id (name or numeric alias) to its selector."""
    _check_tail(tail)
    method = METHOD_ALIASES.get(str(method), str(method))
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}")
    if family is None:
        family = "clayton" if tail == "lower" else "gumbel"
    if method == "fixed1pct":
        return select_fixed(sample, tail, 0.01)
    if method == "fixed2pct":
        return select_fixed(sample, tail, 0.02)
    if method == "mle":
        return select_mle(sample, tail, family)
    if method == "plateau":
        series, clamped = lambda_series(sample, tail)
        result = plateau_estimate(series, tail)
        result.diagnostics["clamped_points"] = clamped
        return result
    if method == "plugin":
        return select_simple_plugin(sample, tail, family, min_extreme=min_extreme)
    if method == "twostep":
        return select_two_step(sample, tail, family, min_extreme=min_extreme)
    if method == "avg_minavg":
        return select_average_minavg(sample, tail, family, m=m, min_extreme=min_extreme)
    return select_average_joint(sample, tail, family, m=m, min_extreme=min_extreme)
