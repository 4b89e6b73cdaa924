"""Long-only maximum-Sharpe allocation and rebalanced backtesting.

The allocator maximizes ``(w'r - r_f) / sqrt(w' C w)`` over the unit simplex
(weights non-negative, summing to one) by projected gradient ascent from
several deterministic and random starting points. Its contract is accuracy
against an exhaustive simplex-grid search, not any particular method.

Backtests rebalance on a fixed day grid: the first trade happens right
after the conditioning stretch, then every ``eta`` trading days. Between
rebalances, holdings drift with prices; nothing is renormalized daily.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .autodiff import make_rng
from .data import PriceMatrix
from .errors import (ConfigError, DegenerateRiskError, InsufficientDataError,
                     ShapeError, UndefinedStatisticError)
from .scenarios import ScenarioSet

PERIODS_PER_YEAR = 252
RISK_FREE_DEFAULT = 0.0
_SIGMA_TINY = 1e-12  # below this, portfolio risk counts as zero
WEIGHT_TOL = 1e-9


@dataclass
class ReturnEstimate:
    """Per-period expected returns and covariance estimated from a price block."""

    mean: np.ndarray  # (n_assets,)
    cov: np.ndarray  # (n_assets, n_assets), symmetric, eigenvalues floored at 0
    provenance: str = ""

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).ravel()
        self.cov = np.asarray(self.cov, dtype=np.float64)
        n = self.mean.size
        if self.cov.shape != (n, n):
            raise ShapeError(f"covariance {self.cov.shape} does not match "
                             f"{n} mean entries")


@dataclass
class AllocationWeights:
    """Simplex weights applied from one rebalance day onward."""

    weights: np.ndarray
    day: int  # 1-based trading-day index of the rebalance

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if abs(self.weights.sum() - 1.0) > WEIGHT_TOL:
            raise ConfigError(f"weights sum to {self.weights.sum()}, expected 1")
        if (self.weights < -WEIGHT_TOL).any() or (self.weights > 1 + WEIGHT_TOL).any():
            raise ConfigError("weights must lie in [0, 1]")


def estimate_returns(prices: np.ndarray, provenance: str = "") -> ReturnEstimate:
    """Sample mean and covariance of simple daily returns of a price block."""
    prices = np.asarray(prices, dtype=np.float64)
    if prices.ndim != 2:
        raise ShapeError(f"expected an (assets, days) block, got {prices.shape}")
    n, t = prices.shape
    if t < 3:
        raise InsufficientDataError(f"need at least 3 days to estimate returns, got {t}")
    rets = prices[:, 1:] / prices[:, :-1] - 1.0
    mean = rets.mean(axis=1)
    if n == 1:
        cov = np.array([[rets.var(ddof=1)]])
    else:
        cov = np.cov(rets, ddof=1)
    cov = 0.5 * (cov + cov.T)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals.min() < 0.0:
        cov = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
        cov = 0.5 * (cov + cov.T)
    return ReturnEstimate(mean, cov, provenance)


# -- allocator ------------------------------------------------------------------------

def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the unit simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, len(v) + 1) > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _portfolio_sigma(w: np.ndarray, cov: np.ndarray) -> float:
    var = float(w @ cov @ w)
    return math.sqrt(max(var, 0.0))


def sharpe_of_weights(w: np.ndarray, est: ReturnEstimate,
                      risk_free: float = RISK_FREE_DEFAULT) -> float | None:
    """Per-period Sharpe ratio of a weight vector; None when risk is zero."""
    sigma = _portfolio_sigma(w, est.cov)
    excess = float(w @ est.mean) - risk_free
    if sigma < _SIGMA_TINY:
        return None
    return excess / sigma


def max_sharpe(est: ReturnEstimate, risk_free: float = RISK_FREE_DEFAULT, *,
               n_random_starts: int = 8, iterations: int = 300) -> np.ndarray:
    """Long-only weights maximizing the Sharpe ratio.

    Projected gradient ascent with backtracking, started from the equal-weight
    point, every single-asset vertex, and seeded random simplex points; the
    best strict improvement wins, so flat objectives keep the equal-weight
    tie-break. A zero-risk optimum is allowed only when one asset carries all
    weight (a riskless asset dominating); any other zero-risk direction is an
    error.
    """
    n = est.mean.size
    if n == 1:
        return np.ones(1)
    mean, cov = est.mean, est.cov

    def objective(w: np.ndarray) -> float:
        sigma = _portfolio_sigma(w, cov)
        excess = float(w @ mean) - risk_free
        if sigma < _SIGMA_TINY:
            if abs(excess) < _SIGMA_TINY:
                return 0.0
            return math.inf if excess > 0 else -math.inf
        return excess / sigma

    def ascend(w: np.ndarray) -> np.ndarray:
        step = 0.1
        value = objective(w)
        for _ in range(iterations):
            sigma = _portfolio_sigma(w, cov)
            if sigma < _SIGMA_TINY or not math.isfinite(value):
                break
            excess = float(w @ mean) - risk_free
            grad = mean / sigma - excess * (cov @ w) / sigma**3
            moved = False
            while step > 1e-14:
                cand = _project_simplex(w + step * grad)
                cand_value = objective(cand)
                if cand_value > value + 1e-15:
                    w, value, moved = cand, cand_value, True
                    step *= 1.5
                    break
                step *= 0.5
            if not moved:
                break
        return w

    starts = [np.full(n, 1.0 / n)]
    starts += [np.eye(n)[i] for i in range(n)]
    rng = make_rng(1234)  # fixed: the allocator itself is deterministic
    starts += [rng.dirichlet(np.ones(n)) for _ in range(n_random_starts)]

    best_w, best_value = starts[0], objective(starts[0])
    for w0 in starts:
        w = ascend(w0.copy())
        value = objective(w)
        if value > best_value + 1e-12:
            best_w, best_value = w, value

    best_w = _project_simplex(best_w)
    if _portfolio_sigma(best_w, cov) < _SIGMA_TINY:
        excess = float(best_w @ mean) - risk_free
        if abs(excess) < _SIGMA_TINY:
            # flat objective, e.g. a riskless flat market: keep the tie-break
            return np.full(n, 1.0 / n)
        if best_w.max() < 1.0 - WEIGHT_TOL:
            raise DegenerateRiskError("optimal direction carries zero risk but is "
                                      "not a single asset")
    return best_w


def sharpe_ratio(returns: np.ndarray, risk_free: float = RISK_FREE_DEFAULT,
                 periods_per_year: int = PERIODS_PER_YEAR) -> float:
    """Annualized Sharpe ratio of a per-period return series."""
    returns = np.asarray(returns, dtype=np.float64).ravel()
    if returns.size < 2:
        raise InsufficientDataError("need at least 2 returns for a Sharpe ratio")
    excess = returns - risk_free
    sigma = excess.std(ddof=1)
    # constant series can leave rounding noise in the deviations
    if sigma <= 1e-14 * max(1.0, float(np.abs(excess).max())):
        raise UndefinedStatisticError("Sharpe ratio undefined: zero volatility")
    return float(excess.mean() / sigma * math.sqrt(periods_per_year))


# -- scenario-driven weights -------------------------------------------------------------

def scenario_weights(scenarios: ScenarioSet, day: int, horizon: int,
                     risk_free: float = RISK_FREE_DEFAULT) -> list[np.ndarray | None]:
    """Per-draw maximum-Sharpe weights from each draw's forward window.

    Each draw is optimized on its own generated block of ``horizon`` days
    starting at ``day`` (truncated at the end of the data). Draws whose
    optimization fails are returned as None with a warning.
    """
    n_days = scenarios.reference.n_days
    stop = min(day - 1 + horizon, n_days)
    if stop - (day - 1) < 3:
        raise InsufficientDataError(
            f"forward window at day {day} has fewer than 3 days")
    out: list[np.ndarray | None] = []
    for r, draw in enumerate(scenarios.draws):
        block = draw[:, day - 1:stop]
        try:
            est = estimate_returns(block, provenance=f"draw {r} day {day}")
            out.append(max_sharpe(est, risk_free))
        except (DegenerateRiskError, InsufficientDataError) as exc:
            warnings.warn(f"draw {r} dropped at day {day}: {exc}")
            out.append(None)
    return out


def mean_weights(per_draw: list[np.ndarray | None]) -> np.ndarray:
    """Average surviving per-draw weight vectors and renormalize to the simplex."""
    ok = [w for w in per_draw if w is not None]
    if not ok:
        raise DegenerateRiskError("every draw failed to produce weights")
    avg = np.mean(ok, axis=0)
    avg = np.maximum(avg, 0.0)
    return avg / avg.sum()


# -- backtesting ---------------------------------------------------------------------------

@dataclass
class Strategy:
    """A label plus a rule mapping a rebalance day to target weights.

    Returning None keeps the previous allocation (used when an optimizer
    declines a rebalance).
    """

    label: str
    weights_for: Callable[[int], "np.ndarray | None"]


def fixed_weights_strategy(weights: np.ndarray, label: str = "fixed") -> Strategy:
    w = np.asarray(weights, dtype=np.float64)
    return Strategy(label, lambda day: w)


def buy_and_hold_strategy(asset_index: int, n_assets: int, label: str) -> Strategy:
    # re-targeting 100% of value to the same single asset is a no-op trade,
    # so a fixed one-hot weight vector is exact buy-and-hold
    w = np.zeros(n_assets)
    w[asset_index] = 1.0
    return fixed_weights_strategy(w, label)


def markowitz_strategy(prices: PriceMatrix, past: int,
                       risk_free: float = RISK_FREE_DEFAULT,
                       label: str = "markowitz") -> Strategy:
    """Optimize on the trailing window of observed prices at each rebalance."""

    def weights_for(day: int):
        block = prices.values[:, day - past - 1:day - 1]
        try:
            return max_sharpe(estimate_returns(block, f"trailing day {day}"),
                              risk_free)
        except DegenerateRiskError as exc:
            warnings.warn(f"{label}: rebalance at day {day} skipped: {exc}")
            return None

    return Strategy(label, weights_for)


WeightTable = dict[int, list["np.ndarray | None"]]


def scenario_weight_table(scenarios: ScenarioSet, days: list[int], horizon: int,
                          risk_free: float = RISK_FREE_DEFAULT) -> WeightTable:
    """Per-draw weights for every rebalance day, computed once and shared
    between the mean strategy and per-draw backtests."""
    return {day: scenario_weights(scenarios, day, horizon, risk_free)
            for day in days}


def scenario_mean_strategy(scenarios: ScenarioSet, horizon: int,
                           risk_free: float = RISK_FREE_DEFAULT,
                           label: str = "scenario-mean",
                           table: WeightTable | None = None) -> Strategy:
    def weights_for(day: int):
        try:
            per_draw = table[day] if table is not None else \
                scenario_weights(scenarios, day, horizon, risk_free)
            return mean_weights(per_draw)
        except (DegenerateRiskError, InsufficientDataError) as exc:
            warnings.warn(f"{label}: rebalance at day {day} skipped: {exc}")
            return None

    return Strategy(label, weights_for)


def scenario_draw_strategy(scenarios: ScenarioSet, draw: int, horizon: int,
                           risk_free: float = RISK_FREE_DEFAULT,
                           label: str | None = None,
                           table: WeightTable | None = None) -> Strategy:
    label = label or f"draw-{draw:04d}"

    def weights_for(day: int):
        per_draw = table[day] if table is not None else \
            scenario_weights(scenarios, day, horizon, risk_free)
        return per_draw[draw]

    return Strategy(label, weights_for)


@dataclass
class BacktestReport:
    """Equity curve and summary statistics of one strategy run."""

    label: str
    eta: int
    days: np.ndarray  # 1-based day indices, starting at the buy-in day
    equity: np.ndarray  # portfolio values, equity[0] == 1
    annual_return: float
    sharpe: float | None  # None when volatility is zero
    allocations: list[AllocationWeights] = field(default_factory=list)

    @property
    def final_value(self) -> float:
        return float(self.equity[-1])


def rebalance_days(n_days: int, past: int, eta: int) -> list[int]:
    """1-based rebalance days: right after the conditioning stretch, then
    every ``eta`` trading days."""
    if eta < 1:
        raise ConfigError(f"rebalance interval must be >= 1, got {eta}")
    # equality allowed: eta == n_days - past is the single-rebalance case
    if n_days < past + eta:
        raise ConfigError(f"horizon of {n_days} days is too short for "
                          f"conditioning {past} plus interval {eta}")
    return list(range(past + 1, n_days + 1, eta))


def backtest(prices: PriceMatrix, strategy: Strategy, eta: int, past: int,
             risk_free: float = RISK_FREE_DEFAULT,
             periods_per_year: int = PERIODS_PER_YEAR) -> BacktestReport:
    """Run one strategy over the test horizon with periodic rebalancing.

    The equity curve starts at 1 on the buy-in day (the last conditioning
    day); trades execute at that day's closing prices and holdings drift
    until the next rebalance.
    """
    values = prices.values
    n_days = prices.n_days
    days = rebalance_days(n_days, past, eta)

    equity = np.empty(n_days - past + 1)
    equity[0] = 1.0
    units = None
    allocations: list[AllocationWeights] = []
    rebalance_set = set(days)

    for day in range(past + 1, n_days + 1):
        if day in rebalance_set:
            target = strategy.weights_for(day)
            if target is not None:
                value = equity[day - past - 1]
                trade_prices = values[:, day - 2]  # previous day's close
                units = value * np.asarray(target) / trade_prices
                allocations.append(AllocationWeights(target, day))
            elif units is None:
                raise ConfigError(f"strategy {strategy.label!r} produced no "
                                  f"weights at its first rebalance (day {day})")
        if units is None:
            raise ConfigError(f"no allocation before day {day}")
        equity[day - past] = float(units @ values[:, day - 1])

    n_periods = n_days - past
    annual_return = float(equity[-1] ** (periods_per_year / n_periods) - 1.0)
    daily = equity[1:] / equity[:-1] - 1.0
    try:
        sharpe = sharpe_ratio(daily, risk_free, periods_per_year)
    except UndefinedStatisticError:
        sharpe = None
    return BacktestReport(strategy.label, eta, np.arange(past, n_days + 1),
                          equity, annual_return, sharpe, allocations)


# -- comparison ---------------------------------------------------------------------------

@dataclass
class ComparisonRow:
    label: str
    annual_return: float
    sharpe: float | None
    final_value: float


@dataclass
class Comparison:
    rows: list[ComparisonRow]
    days: np.ndarray
    curves: dict[str, np.ndarray]  # label -> equity values on the shared day axis


def compare_report(reports: list[BacktestReport], prices: PriceMatrix | None = None,
                   benchmarks: list[str] | None = None,
                   past: int | None = None) -> Comparison:
    """Summarize strategy runs side by side, optionally with buy-and-hold
    benchmark assets appended."""
    if not reports:
        raise ConfigError("no reports to compare")
    reports = list(reports)
    if benchmarks:
        if prices is None or past is None:
            raise ConfigError("benchmark rows need the price matrix and the "
                              "conditioning length")
        for name in benchmarks:
            if name not in prices.tickers:
                raise ConfigError(f"benchmark {name!r} not among tickers")
            idx = prices.tickers.index(name)
            strat = buy_and_hold_strategy(idx, prices.n_assets, f"hold {name}")
            reports.append(backtest(prices, strat, reports[0].eta, past))

    days = reports[0].days
    for rep in reports[1:]:
        if not np.array_equal(rep.days, days):
            raise ConfigError(f"report {rep.label!r} covers a different horizon")
    rows = [ComparisonRow(r.label, r.annual_return, r.sharpe, r.final_value)
            for r in reports]
    curves = {r.label: r.equity for r in reports}
    return Comparison(rows, days, curves)
