import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import taildep as td
from taildep import DomainError


def test_pseudo_sample_comonotone():
    s = td.pseudo_sample([1.0, 2.0, 3.0], [10.0, 20.0, 30.0])
    assert np.allclose(sorted(s.u), [1 / 3, 2 / 3, 1.0])
    assert np.array_equal(s.ranks_u, [1, 2, 3])
    assert np.array_equal(s.ranks_v, [1, 2, 3])


def test_pseudo_sample_antitone():
    s = td.pseudo_sample([1.0, 2.0, 3.0], [30.0, 20.0, 10.0])
    assert np.array_equal(s.ranks_u, [1, 2, 3])
    assert np.array_equal(s.ranks_v, [3, 2, 1])


def test_pseudo_sample_ties_max_rank():
    s = td.pseudo_sample([1.0, 1.0], [5.0, 7.0])
    assert np.array_equal(s.ranks_u, [2, 2])  # ties share the maximal rank
    assert np.allclose(s.u, [1.0, 1.0])


def test_pseudo_sample_validation():
    with pytest.raises(DomainError):
        td.pseudo_sample([1.0], [2.0])
    with pytest.raises(DomainError):
        td.pseudo_sample([1.0, float("nan")], [1.0, 2.0])
    with pytest.raises(DomainError):
        td.pseudo_sample([1.0, 2.0], [1.0, 2.0, 3.0])


def test_rank_invariance_under_monotone_transforms():
    rng = np.random.default_rng(2)
    x = rng.normal(size=200)
    y = rng.normal(size=200)
    base = td.pseudo_sample(x, y)
    warped = td.pseudo_sample(np.exp(x), 3.0 * y - 7.0)
    assert np.array_equal(base.ranks_u, warped.ranks_u)
    assert np.array_equal(base.ranks_v, warped.ranks_v)


# ---------------------------------------------------------------------------
# empirical copula
# ---------------------------------------------------------------------------

def test_empirical_copula_comonotone():
    s = td.pseudo_sample(np.arange(4.0), np.arange(4.0))
    assert td.empirical_copula(s, 0.5, 0.5) == 0.5
    assert td.empirical_copula(s, 1.0, 1.0) == 1.0


def test_empirical_copula_antitone(antitone4):
    assert td.empirical_copula(antitone4, 0.5, 0.5) == 0.0


def test_empirical_copula_monotone_and_two_increasing():
    rng = np.random.default_rng(9)
    s = td.pseudo_sample(rng.normal(size=60), rng.normal(size=60))
    atoms = np.arange(0, 61) / 60
    c = np.array([[td.empirical_copula(s, a, b) for b in atoms] for a in atoms])
    assert np.all(np.diff(c, axis=0) >= 0)
    assert np.all(np.diff(c, axis=1) >= 0)
    rect = c[1:, 1:] - c[1:, :-1] - c[:-1, 1:] + c[:-1, :-1]
    assert rect.min() >= -1e-12


def test_empirical_copula_domain():
    s = td.pseudo_sample([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        td.empirical_copula(s, 1.5, 0.5)


# ---------------------------------------------------------------------------
# lambda estimators
# ---------------------------------------------------------------------------

def test_lambda_lower_comonotone(comonotone3):
    for i in (1, 2, 3):
        assert td.lambda_lower(comonotone3, i) == 1.0


def test_lambda_lower_antitone(antitone4):
    assert td.lambda_lower(antitone4, 2) == 0.0


def test_lambda_lower_at_full_rank():
    rng = np.random.default_rng(10)
    s = td.pseudo_sample(rng.normal(size=30), rng.normal(size=30))
    assert td.lambda_lower(s, 30) == 1.0


def test_lambda_upper_comonotone(comonotone3):
    for i in (1, 2):
        assert td.lambda_upper(comonotone3, i) == 1.0


def test_lambda_upper_independence_like():
    # 100-point sample engineered so that C_n(0.9, 0.9) = 0.81
    n = 100
    ru = np.arange(1, n + 1)
    rv = np.empty(n, dtype=int)
    rv[:81] = np.arange(1, 82)        # both <= 90
    rv[81:90] = np.arange(92, 101)    # u-rank <= 90, v-rank > 90
    rv[90:99] = np.arange(82, 91)     # u-rank > 90, v-rank <= 90
    rv[99] = 91                       # both > 90
    s = td.PseudoSample(ru.astype(np.int64), rv.astype(np.int64))
    assert td.empirical_copula(s, 0.9, 0.9) == pytest.approx(0.81)
    assert td.lambda_upper(s, 90) == pytest.approx((1 - 1.8 + 0.81) / 0.1)


def test_lambda_upper_antitone(antitone4):
    assert td.lambda_upper(antitone4, 2) == 0.0
    assert td.lambda_upper(antitone4, 3) == 0.0


def test_lambda_upper_never_needs_clamping():
    """Max-rank diagonal counts obey the Frechet bounds, so the raw ratio
    already lies in [0, 1]; the clamp is a guard, not a correction."""
    rng = np.random.default_rng(21)
    for _ in range(20):
        s = td.pseudo_sample(rng.normal(size=37), rng.normal(size=37))
        for i in range(1, 37):
            raw = td.lambda_upper(s, i, clamp=False)
            assert 0.0 <= raw <= 1.0


def test_lambda_upper_rejects_rank_n(comonotone3):
    with pytest.raises(DomainError):
        td.lambda_upper(comonotone3, 3)


def test_lambda_average(comonotone3):
    assert td.lambda_average(comonotone3, [1, 2], "upper") == 1.0
    rng = np.random.default_rng(12)
    s = td.pseudo_sample(rng.normal(size=40), rng.normal(size=40))
    a = td.lambda_lower(s, 4)
    b = td.lambda_lower(s, 8)
    assert td.lambda_average(s, [4, 8], "lower") == pytest.approx((a + b) / 2, abs=1e-15)
    assert td.lambda_average(s, [4], "lower") == td.lambda_lower(s, 4)


def test_lambda_series_matches_pointwise():
    rng = np.random.default_rng(13)
    s = td.pseudo_sample(rng.normal(size=50), rng.normal(size=50))
    lower, _ = td.lambda_series(s, "lower")
    upper, clamped = td.lambda_series(s, "upper")
    assert lower.shape == (49,)
    for i in (1, 10, 49):
        assert lower[i - 1] == td.lambda_lower(s, i)
        assert upper[i - 1] == td.lambda_upper(s, i)
    assert clamped >= 0


def test_lambda_series_clamp_count(antitone4):
    _, clamped = td.lambda_series(antitone4, "upper")
    assert clamped == 0  # Frechet bounds keep rank-based ratios inside [0, 1]


# ---------------------------------------------------------------------------
# orthant probabilities and extreme sets
# ---------------------------------------------------------------------------

def test_joint_orthant_comonotone(comonotone3):
    probs = [td.joint_orthant_prob(comonotone3, j) for j in range(3)]
    assert probs == pytest.approx([1 / 3, 2 / 3, 1.0])


def test_joint_orthant_antitone(antitone4):
    for j in range(4):
        assert td.joint_orthant_prob(antitone4, j) == pytest.approx(0.25)


def test_joint_orthant_bounds(comonotone3):
    with pytest.raises(DomainError):
        td.joint_orthant_prob(comonotone3, 3)


def test_extreme_set_comonotone(comonotone3):
    assert list(td.extreme_set(comonotone3, 1, "lower")) == [0]
    assert list(td.extreme_set(comonotone3, 3, "lower")) == [0, 1, 2]


def test_extreme_set_antitone_empty(antitone4):
    # C_n(0.5, 0.5) = 0 and every orthant probability is 1/4
    assert td.extreme_set(antitone4, 2, "lower").size == 0


def test_extreme_sets_cover_at_common_cut():
    rng = np.random.default_rng(14)
    s = td.pseudo_sample(rng.normal(size=80), rng.normal(size=80))
    i = 40
    lower = set(td.extreme_set(s, i, "lower"))
    upper = set(td.extreme_set(s, i, "upper"))
    assert lower | upper == set(range(80))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_estimates_rank_invariant(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=25)
    y = rng.normal(size=25)
    s1 = td.pseudo_sample(x, y)
    s2 = td.pseudo_sample(np.exp(2 * x), y**3)
    for i in (1, 5, 24):
        assert td.lambda_lower(s1, i) == td.lambda_lower(s2, i)
        assert td.lambda_upper(s1, i) == td.lambda_upper(s2, i)


def test_lambda_lower_converges(clayton_replications):
    """Mean estimate at a fixed 5% threshold approaches delta(a)/a."""
    l1, _ = clayton_replications
    target = float(td.Clayton(1.0).diagonal(0.05) / 0.05)
    assert target == pytest.approx(0.512821, abs=1e-6)
    assert abs(l1[:2000].mean() - target) <= 0.02
