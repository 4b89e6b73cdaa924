"""Seeded synthetic price histories for demos and self-contained tests."""

from __future__ import annotations

import datetime as _dt

import numpy as np

from .autodiff import make_rng
from .data import PriceMatrix


def trading_days(n_days: int, start: str = "2015-01-01") -> list[str]:
    """Weekday sequence of ISO dates, long enough for ``n_days`` entries."""
    day = _dt.date.fromisoformat(start)
    out: list[str] = []
    while len(out) < n_days:
        if day.weekday() < 5:
            out.append(day.isoformat())
        day += _dt.timedelta(days=1)
    return out


def gbm_prices(n_assets: int, n_days: int, seed: int, *,
               drift: float = 0.08, volatility: float = 0.18,
               initial: float = 100.0, periods_per_year: int = 252,
               tickers: list[str] | None = None,
               start_date: str = "2015-01-01") -> PriceMatrix:
    """Geometric Brownian price paths with mildly correlated shocks.

    Per-asset drift and volatility are jittered around the given levels so
    the assets are distinguishable; the log-price increments are exact, so
    paths stay strictly positive.
    """
    rng = make_rng(seed)
    if tickers is None:
        tickers = [f"SYN{i}" for i in range(n_assets)]
    mu = drift * (0.5 + rng.random(n_assets))
    sigma = volatility * (0.7 + 0.6 * rng.random(n_assets))
    dt = 1.0 / periods_per_year

    common = rng.standard_normal(n_days - 1)
    own = rng.standard_normal((n_assets, n_days - 1))
    shocks = 0.3 * common[None, :] + np.sqrt(1.0 - 0.3**2) * own

    increments = (mu[:, None] - 0.5 * sigma[:, None] ** 2) * dt \
        + sigma[:, None] * np.sqrt(dt) * shocks
    log_paths = np.cumsum(np.concatenate([np.zeros((n_assets, 1)), increments], axis=1),
                          axis=1)
    start_levels = initial * (0.5 + rng.random(n_assets))
    values = start_levels[:, None] * np.exp(log_paths)
    return PriceMatrix(list(tickers), trading_days(n_days, start_date), values)
