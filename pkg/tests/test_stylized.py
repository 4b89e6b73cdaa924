import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ganfolio import stylized as sf
from ganfolio.errors import InsufficientDataError, UndefinedStatisticError

import oracles


RNG = np.random.default_rng(20240817)
SERIES_1K = RNG.standard_t(df=4, size=1000) * 0.01


# -- log returns -----------------------------------------------------------------

def test_log_returns_exact():
    prices = [1.0, math.e, math.e**2]
    assert np.allclose(sf.log_returns(prices), [1.0, 1.0])


def test_log_returns_constant():
    assert np.allclose(sf.log_returns([5.0] * 10), 0.0)


def test_log_returns_rejects_non_positive():
    with pytest.raises(UndefinedStatisticError):
        sf.log_returns([1.0, -2.0, 3.0])


def test_log_returns_matches_high_precision_recompute():
    prices = np.abs(RNG.normal(100, 10, size=500)) + 1.0
    mine = sf.log_returns(prices)
    theirs = [math.log(float(prices[i + 1])) - math.log(float(prices[i]))
              for i in range(len(prices) - 1)]
    assert np.max(np.abs(mine - np.array(theirs))) < 1e-14


# -- single-series statistics vs naive oracles --------------------------------------

def test_autocorrelation_alternating_series():
    r = np.array([1.0, -1.0] * 50)
    assert sf.autocorrelation(r, 1) == pytest.approx(-1.0)


def test_autocorrelation_lag_zero_is_one():
    assert sf.autocorrelation(SERIES_1K, 0) == 1.0


def test_autocorrelation_iid_is_small():
    r = np.random.default_rng(7).standard_normal(10_000)
    for k in range(1, 11):
        assert abs(sf.autocorrelation(r, k)) < 0.05


@pytest.mark.parametrize("k", [1, 2, 5, 10])
def test_autocorrelation_matches_oracle(k):
    assert sf.autocorrelation(SERIES_1K, k) == pytest.approx(
        oracles.autocorrelation_naive(SERIES_1K, k), abs=1e-10)


def test_autocorrelation_zero_variance():
    with pytest.raises(UndefinedStatisticError):
        sf.autocorrelation(np.zeros(50), 1)


def test_leverage_iid_symmetric_near_zero():
    r = np.random.default_rng(8).standard_normal(100_000)
    assert abs(sf.leverage_effect(r, 1)) < 0.05


def test_leverage_constructed_negative():
    # negative returns precede doubled magnitudes
    rng = np.random.default_rng(9)
    r = np.zeros(4000)
    r[0] = rng.standard_normal() * 0.01
    for t in range(1, 4000):
        scale = 0.02 if r[t - 1] < 0 else 0.01
        r[t] = rng.standard_normal() * scale
    assert sf.leverage_effect(r, 1) < 0.0


@pytest.mark.parametrize("k", [1, 3, 10])
def test_leverage_matches_oracle(k):
    assert sf.leverage_effect(SERIES_1K, k) == pytest.approx(
        oracles.leverage_naive(SERIES_1K, k), abs=1e-10)


def test_coarse_fine_all_positive_returns():
    r = np.abs(RNG.standard_normal(300)) + 0.01
    rho0, _ = sf.coarse_fine(r, window=5, lag=0)
    assert rho0 == pytest.approx(1.0)


def test_coarse_fine_iid_asymmetry_small():
    r = np.random.default_rng(10).standard_normal(100_000)
    _, delta = sf.coarse_fine(r)
    assert abs(delta) < 0.02


@pytest.mark.parametrize("k", [1, 2, 3])
def test_coarse_fine_matches_oracle(k):
    rho, delta = sf.coarse_fine(SERIES_1K, window=5, lag=k)
    assert rho == pytest.approx(oracles.coarse_fine_naive(SERIES_1K, 5, k), abs=1e-10)
    expected_delta = (oracles.coarse_fine_naive(SERIES_1K, 5, k)
                      - oracles.coarse_fine_naive(SERIES_1K, 5, -k))
    assert delta == pytest.approx(expected_delta, abs=1e-10)


def test_moments_gaussian_anchor():
    r = np.random.default_rng(11).standard_normal(1_000_000)
    kurt, skew = sf.moments(r)
    assert 2.9 <= kurt <= 3.1
    assert -0.05 <= skew <= 0.05


def test_moments_two_point_series():
    kurt, skew = sf.moments(np.array([1.0, -1.0] * 20))
    assert kurt == pytest.approx(1.0)
    assert skew == pytest.approx(0.0)


def test_moments_match_oracle():
    kurt, skew = sf.moments(SERIES_1K)
    okurt, oskew = oracles.moments_naive(SERIES_1K)
    assert kurt == pytest.approx(okurt, abs=1e-10)
    assert skew == pytest.approx(oskew, abs=1e-10)


def test_pearson_definitional():
    x = RNG.standard_normal(200)
    assert sf.pearson(x, x) == pytest.approx(1.0)
    assert sf.pearson(x, -x) == pytest.approx(-1.0)


def test_pearson_matches_oracle():
    x = RNG.standard_normal(1000)
    y = 0.3 * x + RNG.standard_normal(1000)
    assert sf.pearson(x, y) == pytest.approx(oracles.pearson_naive(x, y), abs=1e-10)


def test_pearson_constant_is_undefined():
    with pytest.raises(UndefinedStatisticError):
        sf.pearson(np.ones(10), RNG.standard_normal(10))


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=-50, max_value=50).filter(lambda a: abs(a) > 1e-6),
       st.floats(min_value=-100, max_value=100))
def test_pearson_affine_invariance(a, b):
    x = np.linspace(-1.0, 2.0, 80) ** 3  # fixed non-constant series
    got = sf.pearson(x, a * x + b)
    assert got == pytest.approx(1.0 if a > 0 else -1.0, abs=1e-12)


# -- tail exponent -------------------------------------------------------------------

def pareto_samples(alpha, n, seed, x_min=1.0):
    u = np.random.default_rng(seed).random(n)
    return x_min * (1.0 - u) ** (-1.0 / (alpha - 1.0))


def test_tail_exponent_recovers_pareto():
    # survival exponent alpha-1 = 2.5 gives density exponent alpha = 3.5
    samples = pareto_samples(3.5, 50_000, seed=12)
    fit = sf.tail_exponent(samples)
    assert 3.3 <= fit.alpha <= 3.7
    assert fit.power_law_plausible


def test_tail_exponent_gaussian_flagged():
    fit = sf.tail_exponent(np.random.default_rng(13).standard_normal(50_000))
    assert fit.alpha > 5.0
    assert not fit.power_law_plausible


def test_tail_exponent_converges_with_samples():
    small = sf.tail_exponent(pareto_samples(3.5, 1_000, seed=14))
    large = sf.tail_exponent(pareto_samples(3.5, 100_000, seed=14))
    assert abs(large.alpha - 3.5) < abs(small.alpha - 3.5)
    assert abs(large.alpha - 3.5) < 0.1


def test_tail_exponent_needs_observations():
    with pytest.raises(InsufficientDataError):
        sf.tail_exponent(np.ones(50))


# -- cross-asset statistics ------------------------------------------------------------

def test_cross_correlation_self_pair_lag_zero():
    x = RNG.standard_normal(500)
    assert sf.cross_correlation(x, x.copy(), 0) == pytest.approx(1.0)


def test_cross_stats_independent_assets_near_zero():
    rng = np.random.default_rng(15)
    returns = [rng.standard_normal(50_000) for _ in range(3)]
    stats = sf.cross_stats(returns)
    assert abs(stats.cross_correlation) < 0.01
    assert abs(stats.volatility_correlation) < 0.01
    assert stats.n_pairs == 3


@pytest.mark.parametrize("k", [0, 1, 5, 10])
def test_cross_statistics_match_oracles(k):
    x = SERIES_1K
    y = np.roll(SERIES_1K, 3) * 0.8 + RNG.standard_normal(1000) * 0.004
    assert sf.cross_correlation(x, y, k) == pytest.approx(
        oracles.cross_correlation_naive(x, y, k), abs=1e-10)
    assert sf.volatility_correlation(x, y, k) == pytest.approx(
        oracles.cross_correlation_naive(np.abs(x), np.abs(y), k), abs=1e-10)
    assert sf.cross_leverage(x, y, k) == pytest.approx(
        oracles.cross_leverage_naive(x, y, k), abs=1e-10)


def test_cross_stats_skips_degenerate_series():
    returns = [RNG.standard_normal(300), np.zeros(300), RNG.standard_normal(300)]
    with pytest.warns(UserWarning, match="degenerate"):
        stats = sf.cross_stats(returns)
    assert stats.n_pairs == 1


# -- report assembly ---------------------------------------------------------------------

def test_fact_report_row_names():
    assert sf.FactReport.ROW_NAMES == ("Autocorrelation", "Fat-tail",
                                       "Leverage effect", "Coarse-fine",
                                       "Kurtosis", "Skewness")


def test_fact_report_on_panel():
    from conftest import make_price_matrix
    pm = make_price_matrix(n_assets=3, n_days=400, seed=21)
    report = sf.fact_report(pm.values, pm.tickers)
    assert [a.label for a in report.assets] == pm.tickers
    rows = report.mean_rows()
    assert rows["Kurtosis"] is not None and rows["Kurtosis"] >= 1.0
    assert report.cross is not None and report.cross.n_pairs == 3
