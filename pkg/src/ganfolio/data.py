"""Price ingestion, window slicing, and per-window price normalization.

Input files are wide comma-separated tables: a ``date`` column of strictly
increasing ISO-8601 trading days followed by one column of adjusted closing
prices per ticker. Blank cells, unordered dates, and non-positive prices are
all rejected at load time.

Windows span ``w = h + f`` consecutive days: ``h`` conditioning days whose
per-asset mean and standard deviation normalize the whole window into a
banded range (value three standard deviations from the mean maps to one),
and ``f`` future days. De-normalization inverts the map exactly.
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, ShapeError

# guards constant windows, where the historical deviation is zero
SIGMA_FLOOR_SCALE = 1e-8


@dataclass(frozen=True)
class WindowConfig:
    """Window lengths: ``past`` conditioning days and ``future`` generated days."""

    past: int  # h
    future: int  # f

    def __post_init__(self):
        if self.past < 2:
            raise ConfigError(f"historical window must be >= 2 days, got {self.past}")
        if self.future < 1:
            raise ConfigError(f"future window must be >= 1 day, got {self.future}")

    @property
    def width(self) -> int:
        return self.past + self.future


@dataclass
class PriceMatrix:
    """Adjusted closing prices, one row per asset, one column per trading day."""

    tickers: list[str]
    dates: list[str]
    values: np.ndarray  # (n_assets, n_days)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.tickers), len(self.dates)):
            raise DataError(f"price block {self.values.shape} does not match "
                            f"{len(self.tickers)} tickers x {len(self.dates)} dates")
        if not np.isfinite(self.values).all():
            raise DataError("price matrix contains non-finite values")
        if (self.values <= 0).any():
            a, d = np.argwhere(self.values <= 0)[0]
            raise DataError(f"non-positive price for {self.tickers[a]} on {self.dates[d]}")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise DataError(f"dates not strictly increasing: {prev!r} then {cur!r}")

    @property
    def n_assets(self) -> int:
        return len(self.tickers)

    @property
    def n_days(self) -> int:
        return len(self.dates)


@dataclass
class NormStats:
    """Per-asset mean and floored standard deviation of the conditioning days."""

    mean: np.ndarray  # (n_assets,)
    std: np.ndarray  # (n_assets,), floored strictly above zero

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).ravel()
        self.std = np.asarray(self.std, dtype=np.float64).ravel()
        if self.mean.shape != self.std.shape:
            raise ShapeError(f"mean {self.mean.shape} vs std {self.std.shape}")
        if (self.std <= 0).any():
            raise DataError("normalization std must be strictly positive after flooring")


@dataclass
class WindowSample:
    """One normalized window: conditioning block, optional future block, stats."""

    history: np.ndarray  # (n_assets, past), normalized
    future: np.ndarray | None  # (n_assets, future), normalized, None at inference
    stats: NormStats
    start_index: int  # 1-based day index of the window's first column


def _parse_iso_date(text: str, row: int) -> str:
    try:
        _dt.date.fromisoformat(text)
    except ValueError as exc:
        raise DataError(f"row {row}: bad ISO date {text!r}") from exc
    return text


def read_table(path: str | Path) -> tuple[list[str], list[str], np.ndarray]:
    """Read a wide CSV table of dated series without price-specific checks.

    Returns ``(tickers, dates, values)`` with values shaped (assets, days).
    Cells must be non-empty numbers and dates strictly increasing ISO-8601;
    positivity is left to the caller (synthetic series may go negative).
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"price file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if not header or header[0].strip().lower() != "date" or len(header) < 2:
            raise DataError(f"{path}: header must be 'date,<ticker>,...', got {header!r}")
        tickers = [c.strip() for c in header[1:]]
        if any(not t for t in tickers):
            raise DataError(f"{path}: blank ticker name in header")

        dates: list[str] = []
        columns: list[list[float]] = []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path} row {row_no}: expected {len(header)} cells, "
                                f"got {len(row)}")
            dates.append(_parse_iso_date(row[0].strip(), row_no))
            vals = []
            for col_no, cell in enumerate(row[1:], start=1):
                cell = cell.strip()
                if not cell:
                    raise DataError(f"{path} row {row_no}, column {tickers[col_no - 1]!r}: "
                                    "empty cell")
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(f"{path} row {row_no}, column "
                                    f"{tickers[col_no - 1]!r}: bad number {cell!r}") from None
            columns.append(vals)

    if not dates:
        raise DataError(f"{path}: no data rows")
    values = np.array(columns).T
    for prev, cur in zip(dates, dates[1:]):
        if cur <= prev:
            raise DataError(f"{path}: dates not strictly increasing: "
                            f"{prev!r} then {cur!r}")
    return tickers, dates, values


def load_prices(path: str | Path) -> PriceMatrix:
    """Read a wide CSV price table and validate every price-matrix invariant."""
    tickers, dates, values = read_table(path)
    return PriceMatrix(tickers, dates, values)


def write_table(path: str | Path, tickers: list[str], dates: list[str],
                values: np.ndarray) -> None:
    """Write a wide CSV table in the format ``read_table`` reads.

    Values use shortest-roundtrip formatting, so a write/read cycle is exact.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + list(tickers))
        for j, day in enumerate(dates):
            writer.writerow([day] + [repr(float(v)) for v in values[:, j]])


def save_prices(prices: PriceMatrix, path: str | Path) -> None:
    """Write a price matrix as a wide CSV readable by ``load_prices``."""
    write_table(path, prices.tickers, prices.dates, prices.values)


def training_indices(n_days: int, width: int) -> np.ndarray:
    """All 1-based start positions of full windows in a training history.

    Returns ``1 .. n_days - width + 1`` in order; shuffling is the caller's
    job, once per epoch, without replacement.
    """
    if width < 1:
        raise ConfigError(f"window width must be positive, got {width}")
    if n_days < width:
        raise ConfigError(f"history of {n_days} days cannot fit a {width}-day window")
    return np.arange(1, n_days - width + 2)


def inference_indices(n_days: int, cfg: WindowConfig) -> np.ndarray:
    """1-based start days of the non-overlapping future blocks of a test span.

    The sequence starts right after the first conditioning block and strides
    by the future length; only starts whose full block fits are included.
    Any trailing remainder shorter than a block is handled downstream by
    truncating one extra draw.
    """
    if n_days < cfg.width:
        raise ConfigError(f"test span of {n_days} days is shorter than one "
                          f"{cfg.width}-day window")
    first = cfg.past + 1
    last = n_days - cfg.future  # last start with a full block: i + f - 1 <= n_days
    return np.arange(first, last + 2, cfg.future, dtype=int)


def window_stats(prices: PriceMatrix, start: int, past: int) -> NormStats:
    """Mean and floored population standard deviation of the conditioning days only."""
    if not 1 <= start or start + past - 1 > prices.n_days:
        raise DataError(f"window [{start}, {start + past - 1}] out of "
                        f"{prices.n_days} days")
    block = prices.values[:, start - 1:start - 1 + past]
    mean = block.mean(axis=1)
    std = block.std(axis=1)  # population form: divide by the day count
    floor = SIGMA_FLOOR_SCALE * np.maximum(1.0, mean)
    return NormStats(mean, np.maximum(std, floor))


def normalize(values: np.ndarray, stats: NormStats) -> np.ndarray:
    """Map prices into the banded range: (p - mean) / (3 std), per asset row."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] != stats.mean.size:
        raise ShapeError(f"{values.shape[0]} asset rows vs {stats.mean.size} stat entries")
    return (values - stats.mean[:, None]) / (3.0 * stats.std[:, None])


def denormalize(values: np.ndarray, stats: NormStats) -> np.ndarray:
    """Invert ``normalize``: p = v * 3 std + mean, per asset row."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] != stats.mean.size:
        raise ShapeError(f"{values.shape[0]} asset rows vs {stats.mean.size} stat entries")
    return values * (3.0 * stats.std[:, None]) + stats.mean[:, None]


def extract_window(prices: PriceMatrix, start: int, cfg: WindowConfig,
                   with_future: bool = True) -> WindowSample:
    """Slice one window at a 1-based start day and normalize it.

    The normalization statistics come from the conditioning days alone, and
    the same statistics scale the future block, so nothing about the future
    leaks into the conditioning input.
    """
    end = start + (cfg.width if with_future else cfg.past) - 1
    if start < 1 or end > prices.n_days:
        raise DataError(f"window [{start}, {end}] out of {prices.n_days} days")
    stats = window_stats(prices, start, cfg.past)
    hist = normalize(prices.values[:, start - 1:start - 1 + cfg.past], stats)
    fut = None
    if with_future:
        raw = prices.values[:, start - 1 + cfg.past:start - 1 + cfg.width]
        fut = normalize(raw, stats)
    return WindowSample(hist, fut, stats, start)
