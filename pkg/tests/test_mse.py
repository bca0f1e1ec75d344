import math

import numpy as np
import pytest

import taildep as td
from taildep import Clayton, DomainError, Gaussian, Gumbel, StudentT, Survival
from taildep.mse import MseDecomposition

PRODUCT = Gaussian(0.0)


# ---------------------------------------------------------------------------
# decomposition container
# ---------------------------------------------------------------------------

def test_decomposition_total_is_exact_sum():
    d = MseDecomposition(variance=0.125, bias_sq=0.5, alpha=0.1, n=100)
    assert d.total == 0.125 + 0.5


def test_decomposition_rejects_negative():
    with pytest.raises(DomainError):
        MseDecomposition(variance=-1e-3, bias_sq=0.0, alpha=0.1, n=10)
    with pytest.raises(DomainError):
        MseDecomposition(variance=float("nan"), bias_sq=0.0, alpha=0.1, n=10)


# ---------------------------------------------------------------------------
# variance kernel
# ---------------------------------------------------------------------------

def test_variance_kernel_product_copula():
    # independence reduces the kernel to u^2 (1-u)^2
    assert td.variance_kernel(PRODUCT, 0.5) == pytest.approx(0.0625, abs=1e-12)
    assert td.variance_kernel(PRODUCT, 0.1) == pytest.approx(0.0081, abs=1e-12)


def test_variance_kernel_clayton_value():
    # frozen from an independent evaluation of the closed-form bracket
    assert td.variance_kernel(Clayton(1.0), 0.05) == pytest.approx(0.0091293, rel=1e-4)


def test_variance_kernel_domain():
    for bad in (0.0, 1.0, -0.2, 1.1):
        with pytest.raises(DomainError):
            td.variance_kernel(Clayton(1.0), bad)


def test_variance_kernel_nonnegative_grids():
    for model in (Clayton(0.5), Clayton(2.0), Gumbel(1.2), Gumbel(3.0),
                  Gaussian(0.6), StudentT(0.4, 3.0), Survival(Clayton(1.0))):
        for u in np.linspace(0.02, 0.98, 25):
            assert td.variance_kernel(model, float(u)) >= 0.0


# ---------------------------------------------------------------------------
# lower / upper decompositions
# ---------------------------------------------------------------------------

def test_mse_lower_clayton_frozen_triple():
    d = td.mse_lower(Clayton(1.0), 1000, 0.05)
    assert d.variance == pytest.approx(3.6522e-3, rel=1e-4)
    assert d.bias_sq == pytest.approx(1.64366e-4, rel=1e-4)
    assert d.total == pytest.approx(3.8166e-3, rel=1e-4)


def test_mse_upper_gumbel_frozen_triple():
    d = td.mse_upper(Gumbel(2.0), 1000, 0.95)
    assert d.variance == pytest.approx(3.2887e-3, rel=1e-4)
    assert d.bias_sq == pytest.approx(2.18760e-4, rel=1e-4)
    assert d.total == pytest.approx(3.5074e-3, rel=1e-4)


def test_mse_lower_bias_vanishes_in_the_tail():
    d = td.mse_lower_clayton(1.0, 1000, 1e-6)
    assert d.bias_sq <= 1e-8


def test_mse_upper_bias_vanishes_toward_one():
    d = td.mse_upper_gumbel(2.0, 1000, 1.0 - 1e-7)
    assert d.bias_sq <= 1e-8


def test_variance_scales_exactly_with_n():
    base = td.mse_lower(Clayton(1.0), 500, 0.05)
    quad = td.mse_lower(Clayton(1.0), 2000, 0.05)
    assert quad.variance == base.variance / 4.0
    assert quad.bias_sq == base.bias_sq


def test_closed_forms_match_generic_paths():
    """Proposition-style closed forms against the kernel evaluation with
    analytic diagonal and h-functions, 100 (theta, alpha) points each."""
    for theta in (0.5, 1.0, 2.0, 4.0):
        model = Clayton(theta)
        for a in np.linspace(0.02, 0.98, 25):
            c = td.mse_lower_clayton(theta, 1000, float(a))
            g = td.mse_lower(model, 1000, float(a))
            assert abs(c.variance - g.variance) <= 1e-12 * max(1.0, g.variance)
            assert abs(c.bias_sq - g.bias_sq) <= 1e-12 * max(1.0, g.bias_sq)
    for theta in (1.25, 1.5, 2.0, 3.0):
        model = Gumbel(theta)
        for a in np.linspace(0.02, 0.98, 25):
            c = td.mse_upper_gumbel(theta, 1000, float(a))
            g = td.mse_upper(model, 1000, float(a))
            assert abs(c.variance - g.variance) <= 1e-12 * max(1.0, g.variance)
            assert abs(c.bias_sq - g.bias_sq) <= 1e-12 * max(1.0, g.bias_sq)


def test_clayton_bias_limit_at_one():
    theta = 1.7
    d = td.mse_lower_clayton(theta, 100, 1.0 - 1e-10)
    expected = (1.0 - 2.0 ** (-1.0 / theta)) ** 2
    assert d.bias_sq == pytest.approx(expected, rel=1e-6)


def test_survival_duality():
    model = Gumbel(2.0)
    rotated = Survival(model)
    for a in np.linspace(0.05, 0.95, 19):
        up = td.mse_upper(model, 700, float(a))
        lo = td.mse_lower(rotated, 700, float(1.0 - a))
        assert abs(up.variance - lo.variance) <= 1e-10
        assert abs(up.bias_sq - lo.bias_sq) <= 1e-10


def test_mse_domain_errors():
    with pytest.raises(DomainError):
        td.mse_lower(Clayton(1.0), 100, 0.0)
    with pytest.raises(DomainError):
        td.mse_upper(Gumbel(2.0), 100, 1.0)
    with pytest.raises(DomainError):
        td.mse_lower_clayton(-1.0, 100, 0.5)
    with pytest.raises(DomainError):
        td.mse_upper_gumbel(0.9, 100, 0.5)


# ---------------------------------------------------------------------------
# covariance kernel
# ---------------------------------------------------------------------------

def test_covariance_kernel_product_copula():
    assert td.covariance_kernel(PRODUCT, 0.1, 0.2) == pytest.approx(0.0064, abs=1e-12)
    # min(u,v)^2 (1 - max(u,v))^2 on a small grid
    for u in (0.2, 0.5, 0.7):
        for v in (0.3, 0.6, 0.9):
            expected = min(u, v) ** 2 * (1.0 - max(u, v)) ** 2
            assert td.covariance_kernel(PRODUCT, u, v) == pytest.approx(expected, abs=1e-12)


def test_covariance_kernel_symmetry():
    for model in (Clayton(1.0), Gumbel(2.0)):
        for (u, v) in ((0.1, 0.3), (0.4, 0.8), (0.05, 0.9)):
            assert td.covariance_kernel(model, u, v) == pytest.approx(
                td.covariance_kernel(model, v, u), rel=1e-12
            )


def test_covariance_kernel_diagonal_identity():
    grids = [(Clayton(t), np.linspace(0.01, 0.99, 50)) for t in (0.5, 1.0, 2.0)]
    grids += [(Gumbel(t), np.linspace(0.01, 0.99, 50)) for t in (1.5, 2.0)]
    for model, us in grids:
        for u in us:
            diff = td.covariance_kernel(model, float(u), float(u)) - td.variance_kernel(model, float(u))
            assert abs(diff) <= 1e-10


# ---------------------------------------------------------------------------
# average-estimator decomposition
# ---------------------------------------------------------------------------

def test_mse_average_single_threshold_reduces_exactly():
    d1 = td.mse_average(Clayton(1.0), 400, [0.07])
    d2 = td.mse_lower(Clayton(1.0), 400, 0.07)
    assert d1.variance == d2.variance
    assert d1.bias_sq == d2.bias_sq


def test_mse_average_product_copula_hand_value():
    # (1/4)(0.81 + 0.64 + 0.64)/100 with the independence kernels
    d = td.mse_average(PRODUCT, 100, [0.1, 0.2])
    assert d.variance == pytest.approx(0.0052250, abs=1e-12)


def test_mse_average_duplicated_thresholds():
    a = td.mse_average(Clayton(1.0), 300, [0.1, 0.1])
    b = td.mse_lower(Clayton(1.0), 300, 0.1)
    assert a.variance == pytest.approx(b.variance, rel=1e-13)
    assert a.bias_sq == pytest.approx(b.bias_sq, rel=1e-13)


def test_mse_average_upper_tail_matches_single():
    a = td.mse_average(Gumbel(2.0), 300, [0.9], tail="upper")
    b = td.mse_upper(Gumbel(2.0), 300, 0.9)
    assert (a.variance, a.bias_sq) == (b.variance, b.bias_sq)


# ---------------------------------------------------------------------------
# inter-threshold correlation
# ---------------------------------------------------------------------------

def test_threshold_correlation_product_value():
    # u(1-v)/((1-u) v) at u=0.1, v=0.2
    assert td.threshold_correlation(PRODUCT, 10, 1, 2) == pytest.approx(4.0 / 9.0, abs=1e-12)


def test_threshold_correlation_diagonal_is_one():
    assert td.threshold_correlation(Clayton(1.0), 1000, 17, 17) == 1.0


def test_threshold_correlation_bounds_and_domain():
    with pytest.raises(DomainError):
        td.threshold_correlation(Clayton(1.0), 100, 0, 5)
    with pytest.raises(DomainError):
        td.threshold_correlation(Clayton(1.0), 100, 5, 100)
    assert abs(td.threshold_correlation(Clayton(1.0), 100, 5, 50)) <= 1.0 + 1e-9


def test_threshold_correlation_decay_pattern():
    """Under Clayton, the correlation decays in the second rank, and the
    decay at a fixed rank offset is stronger the more extreme the pivot."""
    model = Clayton(1.0)
    n = 1000
    decay = [td.threshold_correlation(model, n, 1, j) for j in (2, 5, 10, 25, 50)]
    assert all(a > b for a, b in zip(decay, decay[1:]))
    offset = 20
    at_offset = [td.threshold_correlation(model, n, i, i + offset) for i in (1, 5, 10, 25, 50)]
    assert all(a < b for a, b in zip(at_offset, at_offset[1:]))


def test_covariance_kernel_monte_carlo(clayton_replications):
    """Covariance of the scaled diagonal errors across 5000 replications
    agrees with the kernel at (0.05, 0.10) within 10% relative."""
    l1, l2 = clayton_replications
    n = 5000
    emp = n * 0.05 * 0.10 * np.cov(l1, l2, ddof=1)[0, 1]
    kern = td.covariance_kernel(Clayton(1.0), 0.05, 0.10)
    assert abs(emp - kern) / kern <= 0.10
