"""Statistical fingerprints of return series, single-asset and cross-asset.

The single-asset suite covers the classic stylized facts of daily returns:
near-zero autocorrelation, power-law tails, the leverage effect (past losses
raise future volatility), and the coarse-fine volatility asymmetry, plus
kurtosis and skewness. The cross-asset suite covers lagged cross
correlation, volatility correlation, and cross leverage over asset pairs.

Correlation-style statistics use the population convention (moments divided
by the series length) and average lagged products over the available
overlap, so a perfectly anti-correlated alternating series scores exactly
-1 at lag one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, UndefinedStatisticError
from .scenarios import ScenarioSet

DEFAULT_LAGS = range(1, 11)
COARSE_FINE_WINDOW = 5  # trading days


def log_returns(prices: np.ndarray) -> np.ndarray:
    """Daily log returns of a positive price series."""
    p = np.asarray(prices, dtype=np.float64).ravel()
    if p.size < 2:
        raise InsufficientDataError(f"need at least 2 prices, got {p.size}")
    if (p <= 0).any():
        raise UndefinedStatisticError("log returns need strictly positive prices")
    return np.diff(np.log(p))


def _check_series(r: np.ndarray, min_len: int) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64).ravel()
    if r.size < min_len:
        raise InsufficientDataError(f"need at least {min_len} observations, got {r.size}")
    return r


def autocorrelation(r: np.ndarray, lag: int) -> float:
    """Corr(r_t, r_{t+lag}) with the series' own mean and variance."""
    if lag < 0:
        raise UndefinedStatisticError("lag must be non-negative")
    r = _check_series(r, lag + 2)
    mu = r.mean()
    var = ((r - mu) ** 2).mean()
    if var == 0.0:
        raise UndefinedStatisticError("autocorrelation undefined: zero variance")
    d = r - mu
    if lag == 0:
        return 1.0
    return float((d[:-lag] * d[lag:]).mean() / var)


def leverage_effect(r: np.ndarray, lag: int) -> float:
    """Lead-lag coupling of returns with future squared magnitude.

    (E[r_t |r_{t+lag}|^2] - E[r_t] E[|r_t|^2]) / E[|r_t|^2]^2; negative values
    mean losses precede elevated volatility.
    """
    r = _check_series(r, lag + 2)
    sq = np.abs(r) ** 2
    mean_sq = sq.mean()
    if mean_sq == 0.0:
        raise UndefinedStatisticError("leverage undefined: zero second moment")
    if lag == 0:
        lead = (r * sq).mean()
    else:
        lead = (r[:-lag] * sq[lag:]).mean()
    return float((lead - r.mean() * mean_sq) / mean_sq**2)


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Product-moment correlation of two equal-length series."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise UndefinedStatisticError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise InsufficientDataError("need at least 2 paired observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float((dx**2).mean()))
    sy = math.sqrt(float((dy**2).mean()))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedStatisticError("correlation undefined for a constant series")
    return float((dx * dy).mean() / (sx * sy))


def coarse_fine(r: np.ndarray, window: int = COARSE_FINE_WINDOW,
                lag: int = 1) -> tuple[float, float]:
    """Lead-lag correlation of coarse vs fine volatility and its asymmetry.

    Coarse volatility is |sum of returns| over the window, fine volatility
    the sum of |returns|. Returns ``(rho(lag), rho(lag) - rho(-lag))``; a
    negative asymmetry means fine volatility leads coarse volatility.
    """
    r = _check_series(r, window + abs(lag) + 2)
    # rolling sums over `window` past returns, one entry per anchor day
    csum = np.concatenate([[0.0], np.cumsum(r)])
    rolling = csum[window:] - csum[:-window]
    coarse = np.abs(rolling)
    csum_abs = np.concatenate([[0.0], np.cumsum(np.abs(r))])
    fine = csum_abs[window:] - csum_abs[:-window]

    def rho(k: int) -> float:
        if k >= 0:
            a, b = coarse[k:], fine[:len(fine) - k] if k else fine
        else:
            a, b = coarse[:k], fine[-k:]
        return pearson(a, b)

    plus = rho(lag)
    return plus, plus - rho(-lag)


def moments(r: np.ndarray) -> tuple[float, float]:
    """Standardized (kurtosis, skewness); kurtosis of a normal series is 3."""
    r = _check_series(r, 4)
    mu = r.mean()
    d = r - mu
    m2 = float((d**2).mean())
    if m2 == 0.0:
        raise UndefinedStatisticError("moments undefined: zero variance")
    kurtosis = float((d**4).mean() / m2**2)
    skewness = float((d**3).mean() / m2**1.5)
    return kurtosis, skewness


# -- power-law tail -------------------------------------------------------------

MIN_OBSERVATIONS = 100
MIN_TAIL_POINTS = 20
POWER_LAW_ALPHA_CEILING = 5.0


@dataclass(frozen=True)
class TailFit:
    """Continuous maximum-likelihood power-law fit of |returns| above a cutoff."""

    alpha: float
    cutoff: float
    tail_count: int
    ks_distance: float

    @property
    def power_law_plausible(self) -> bool:
        """Daily-return tails empirically fall in alpha of roughly 3 to 5;
        much larger exponents indicate a thin (non-power-law) tail."""
        return self.alpha <= POWER_LAW_ALPHA_CEILING


def tail_exponent(r: np.ndarray, n_candidates: int = 200) -> TailFit:
    """Fit the tail exponent of |r| by continuous MLE over candidate cutoffs.

    For each candidate cutoff the exponent is the Hill-type estimate
    ``1 + n / sum(log(x_i / cutoff))``; the reported fit is the candidate
    with the smallest Kolmogorov-Smirnov distance between the empirical
    tail and the fitted power law.
    """
    r = _check_series(r, MIN_OBSERVATIONS)
    mags = np.sort(np.abs(r[r != 0.0]))[::-1]
    if mags.size < MIN_TAIL_POINTS:
        raise InsufficientDataError(f"only {mags.size} nonzero observations in the tail")

    # candidate cutoffs: quantile-spaced over sizes keeping >= MIN_TAIL_POINTS
    max_tail = mags.size
    tail_sizes = np.unique(np.linspace(MIN_TAIL_POINTS, max_tail,
                                       min(n_candidates, max_tail - MIN_TAIL_POINTS + 1),
                                       dtype=int))
    log_mags = np.log(mags)
    cum_logs = np.cumsum(log_mags)

    best: TailFit | None = None
    for n_tail in tail_sizes:
        cutoff = mags[n_tail - 1]
        if cutoff <= 0.0:
            continue
        mean_log_excess = cum_logs[n_tail - 1] / n_tail - math.log(cutoff)
        if mean_log_excess <= 0.0:
            continue
        alpha = 1.0 + 1.0 / mean_log_excess
        tail = mags[:n_tail][::-1]  # ascending
        empirical = np.arange(1, n_tail + 1) / n_tail
        model = 1.0 - (tail / cutoff) ** (1.0 - alpha)
        ks = float(np.max(np.abs(empirical - model)))
        if best is None or ks < best.ks_distance:
            best = TailFit(float(alpha), float(cutoff), int(n_tail), ks)
    if best is None:
        raise InsufficientDataError("no admissible tail cutoff found")
    return best


# -- cross-asset statistics -------------------------------------------------------

def cross_correlation(r_lead: np.ndarray, r_lag: np.ndarray, lag: int) -> float:
    """Corr(lead_t, lag_{t+lag}) using each series' own mean and deviation."""
    a = _check_series(r_lead, lag + 2)
    b = _check_series(r_lag, lag + 2)
    if a.size != b.size:
        raise UndefinedStatisticError(f"length mismatch: {a.size} vs {b.size}")
    da, db = a - a.mean(), b - b.mean()
    sa = math.sqrt(float((da**2).mean()))
    sb = math.sqrt(float((db**2).mean()))
    if sa == 0.0 or sb == 0.0:
        raise UndefinedStatisticError("cross correlation undefined for constant series")
    if lag == 0:
        prod = (da * db).mean()
    else:
        prod = (da[:-lag] * db[lag:]).mean()
    return float(prod / (sa * sb))


def volatility_correlation(r_lead: np.ndarray, r_lag: np.ndarray, lag: int) -> float:
    """Lagged correlation of absolute returns across two assets."""
    return cross_correlation(np.abs(np.asarray(r_lead)), np.abs(np.asarray(r_lag)), lag)


def cross_leverage(r_lead: np.ndarray, r_lag: np.ndarray, lag: int) -> float:
    """Leverage coupling across assets: one asset's returns vs another's
    future squared magnitude, normalized by the second asset's second moment."""
    a = _check_series(r_lead, lag + 2)
    b = _check_series(r_lag, lag + 2)
    if a.size != b.size:
        raise UndefinedStatisticError(f"length mismatch: {a.size} vs {b.size}")
    sq = np.abs(b) ** 2
    mean_sq = sq.mean()
    if mean_sq == 0.0:
        raise UndefinedStatisticError("cross leverage undefined: zero second moment")
    if lag == 0:
        lead = (a * sq).mean()
    else:
        lead = (a[:-lag] * sq[lag:]).mean()
    return float((lead - a.mean() * mean_sq) / mean_sq**2)


@dataclass
class CrossStats:
    """Pair-and-lag means of the three cross-asset statistics."""

    cross_correlation: float | None
    volatility_correlation: float | None
    cross_leverage: float | None
    n_pairs: int


def cross_stats(returns: list[np.ndarray], lags=DEFAULT_LAGS) -> CrossStats:
    """Average each cross statistic over all unordered asset pairs and lags.

    Degenerate pairs (constant series) are skipped with a warning rather
    than failing the whole report.
    """
    if len(returns) < 2:
        raise InsufficientDataError("cross statistics need at least 2 assets")
    sums = {"cc": 0.0, "vc": 0.0, "cl": 0.0}
    n_ok = 0
    for i in range(len(returns)):
        for j in range(i + 1, len(returns)):
            try:
                cc = float(np.mean([cross_correlation(returns[i], returns[j], k)
                                    for k in lags]))
                vc = float(np.mean([volatility_correlation(returns[i], returns[j], k)
                                    for k in lags]))
                cl = float(np.mean([cross_leverage(returns[i], returns[j], k)
                                    for k in lags]))
            except UndefinedStatisticError as exc:
                warnings.warn(f"skipping degenerate pair ({i},{j}): {exc}")
                continue
            sums["cc"] += cc
            sums["vc"] += vc
            sums["cl"] += cl
            n_ok += 1
    if n_ok == 0:
        return CrossStats(None, None, None, 0)
    return CrossStats(sums["cc"] / n_ok, sums["vc"] / n_ok, sums["cl"] / n_ok, n_ok)


# -- report assembly --------------------------------------------------------------

@dataclass
class AssetFacts:
    """Single-asset stylized-fact summary; None marks an undefined statistic."""

    label: str
    autocorrelation: float | None  # mean |corr| over the default lags
    tail_alpha: float | None
    leverage: float | None  # mean over the default lags
    coarse_fine: float | None  # asymmetry at lag 1
    kurtosis: float | None
    skewness: float | None


@dataclass
class FactReport:
    """Stylized facts for a whole panel: per-asset rows plus cross-asset means."""

    assets: list[AssetFacts] = field(default_factory=list)
    cross: CrossStats | None = None

    ROW_NAMES = ("Autocorrelation", "Fat-tail", "Leverage effect",
                 "Coarse-fine", "Kurtosis", "Skewness")
    CROSS_ROW_NAMES = ("Cross correlation", "Volatility correlation",
                       "Cross leverage effect")

    def mean_rows(self) -> dict[str, float | None]:
        """Panel means of each per-asset statistic, skipping undefined cells."""
        fields = ["autocorrelation", "tail_alpha", "leverage",
                  "coarse_fine", "kurtosis", "skewness"]
        out: dict[str, float | None] = {}
        for name, attr in zip(self.ROW_NAMES, fields):
            vals = [getattr(a, attr) for a in self.assets
                    if getattr(a, attr) is not None]
            out[name] = float(np.mean(vals)) if vals else None
        if self.cross is not None:
            out["Cross correlation"] = self.cross.cross_correlation
            out["Volatility correlation"] = self.cross.volatility_correlation
            out["Cross leverage effect"] = self.cross.cross_leverage
        return out


def _maybe(fn, *args):
    try:
        return fn(*args)
    except (UndefinedStatisticError, InsufficientDataError):
        return None


def asset_facts(label: str, returns: np.ndarray, lags=DEFAULT_LAGS) -> AssetFacts:
    ac = _maybe(lambda: float(np.mean([abs(autocorrelation(returns, k)) for k in lags])))
    fit = _maybe(tail_exponent, returns)
    lev = _maybe(lambda: float(np.mean([leverage_effect(returns, k) for k in lags])))
    cf = _maybe(lambda: coarse_fine(returns)[1])
    mom = _maybe(moments, returns)
    return AssetFacts(label, ac, fit.alpha if fit else None, lev, cf,
                      mom[0] if mom else None, mom[1] if mom else None)


def fact_report(prices: np.ndarray, labels: list[str]) -> FactReport:
    """Full stylized-fact report for a price panel (assets are rows).

    Assets whose series admit no log returns (non-positive values can occur
    in synthetic draws) get a row of undefined cells instead of failing.
    """
    rows: list[AssetFacts] = []
    usable: list[np.ndarray] = []
    for i, label in enumerate(labels):
        r = _maybe(log_returns, prices[i])
        if r is None:
            rows.append(AssetFacts(label, None, None, None, None, None, None))
            continue
        rows.append(asset_facts(label, r))
        usable.append(r)
    report = FactReport(rows)
    if len(usable) >= 2:
        report.cross = cross_stats(usable)
    return report


@dataclass
class ScenarioEvaluation:
    """Real-vs-synthetic comparison over a scenario collection."""

    real: FactReport
    synthetic: list[FactReport]  # one per draw
    pearson_by_asset: dict[str, float | None]  # mean over draws, generated days only

    def synthetic_mean_rows(self) -> dict[str, float | None]:
        merged: dict[str, list[float]] = {}
        for rep in self.synthetic:
            for name, val in rep.mean_rows().items():
                if val is not None:
                    merged.setdefault(name, []).append(val)
        return {name: (float(np.mean(vals)) if vals else None)
                for name, vals in merged.items()}


def evaluate_scenarios(scenarios: ScenarioSet) -> ScenarioEvaluation:
    """Score synthetic draws against the reference prices.

    Statistics for the synthetic side, and the per-asset correlations, use
    only generated days; the copied conditioning prefix would otherwise
    inflate the agreement.
    """
    if not scenarios.draws:
        raise InsufficientDataError("scenario collection is empty")
    ref = scenarios.reference
    start = scenarios.window.past  # 0-based first generated column
    labels = ref.tickers

    real_report = fact_report(ref.values[:, start:], labels)
    synth_reports = [fact_report(d[:, start:], labels) for d in scenarios.draws]

    pearson_by_asset: dict[str, float | None] = {}
    for i, label in enumerate(labels):
        vals = [
            _maybe(pearson, ref.values[i, start:], d[i, start:])
            for d in scenarios.draws
        ]
        ok = [v for v in vals if v is not None]
        pearson_by_asset[label] = float(np.mean(ok)) if ok else None
    return ScenarioEvaluation(real_report, synth_reports, pearson_by_asset)
