"""Assemble full synthetic test horizons from generated future blocks.

Each draw copies the first conditioning stretch of the reference prices
verbatim, then fills the remaining days with consecutive generated blocks.
Every block is conditioned on the *true* trailing history, never on
previously generated values, so draws are mutually independent functions of
the reference data, the per-draw latent sequence, and the frozen model.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import make_rng
from .data import (PriceMatrix, WindowConfig, denormalize, extract_window,
                   inference_indices, read_table, write_table)
from .errors import ConfigError, DataError, ShapeError
from .gan import GanBundle, generate


@dataclass
class ScenarioSet:
    """Synthetic price matrices aligned to one reference test matrix."""

    reference: PriceMatrix
    window: WindowConfig
    draws: list[np.ndarray] = field(default_factory=list)  # each (assets, days)
    seeds: list[int] = field(default_factory=list)
    checkpoint_digest: str | None = None

    def __post_init__(self):
        ref = self.reference.values
        for r, draw in enumerate(self.draws):
            if draw.shape != ref.shape:
                raise ShapeError(f"draw {r} has shape {draw.shape}, "
                                 f"reference is {ref.shape}")
            if not np.isfinite(draw).all():
                raise DataError(f"draw {r} contains non-finite prices")
            if not np.array_equal(draw[:, :self.window.past],
                                  ref[:, :self.window.past]):
                raise DataError(f"draw {r} does not copy the conditioning prefix")

    @property
    def n_draws(self) -> int:
        return len(self.draws)


def block_starts(n_days: int, window: WindowConfig) -> list[tuple[int, int]]:
    """(1-based start day, block length) pairs covering days past+1 .. n_days.

    Full blocks stride by the future length; a trailing remainder shorter
    than one block is covered by one extra draw truncated to fit.
    """
    starts = [(int(i), window.future) for i in inference_indices(n_days, window)]
    covered = starts[-1][0] + window.future - 1
    if covered < n_days:
        starts.append((covered + 1, n_days - covered))
    return starts


def draw_seeds(master_seed: int, n_draws: int) -> list[int]:
    """Deterministic per-draw seeds derived from one master seed."""
    state = np.random.SeedSequence(master_seed).generate_state(n_draws, np.uint64)
    return [int(s) for s in state]


def generate_scenarios(bundle: GanBundle, reference: PriceMatrix,
                       window: WindowConfig, n_draws: int,
                       seed: int | list[int], *,
                       continuity_shift: bool = False,
                       allow_untrained: bool = False) -> ScenarioSet:
    """Produce independent synthetic price matrices for a test horizon.

    ``seed`` is either a master seed (per-draw seeds are derived from it) or
    an explicit per-draw seed list, which reproduces earlier output exactly.
    ``continuity_shift`` optionally translates each generated block so its
    first day continues from the last observed price; by default blocks are
    de-normalized as generated and may jump at block boundaries.
    """
    if bundle.n_assets != reference.n_assets:
        raise ShapeError(f"model expects {bundle.n_assets} assets, "
                         f"reference has {reference.n_assets}")
    if bundle.window != window:
        raise ConfigError(f"model window {bundle.window} does not match "
                          f"requested window {window}")
    if reference.n_days < window.width:
        raise ConfigError(f"test span of {reference.n_days} days is shorter "
                          f"than one {window.width}-day window")
    if not bundle.trained and not allow_untrained:
        raise ConfigError("bundle is untrained; pass allow_untrained=True to "
                          "generate from raw initialization")

    if isinstance(seed, int):
        seeds = draw_seeds(seed, n_draws)
    else:
        seeds = [int(s) for s in seed]
        if len(seeds) != n_draws:
            raise ConfigError(f"got {len(seeds)} seeds for {n_draws} draws")

    n_days = reference.n_days
    blocks = block_starts(n_days, window)
    draws: list[np.ndarray] = []
    for r in range(n_draws):
        rng = make_rng(seeds[r])
        out = np.full((reference.n_assets, n_days), np.nan)
        out[:, :window.past] = reference.values[:, :window.past]
        for start, length in blocks:
            sample = extract_window(reference, start - window.past, window,
                                    with_future=False)
            z = rng.standard_normal(bundle.latent_dim)
            block = denormalize(generate(bundle, z, sample.history), sample.stats)
            if continuity_shift:
                block += (reference.values[:, start - 2] - block[:, 0])[:, None]
            out[:, start - 1:start - 1 + length] = block[:, :length]
        if not np.isfinite(out).all():
            raise DataError(f"draw {r} left unwritten or non-finite columns")
        draws.append(out)
    return ScenarioSet(reference, window, draws, seeds)


# -- files ---------------------------------------------------------------------------

def _draw_filename(index: int) -> str:
    return f"scenario_{index:04d}.csv"


def export_scenarios(scenarios: ScenarioSet, out_dir: str | Path) -> list[Path]:
    """One CSV per draw, in the price-table format, plus a key-value manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ref = scenarios.reference
    paths = []
    for r, draw in enumerate(scenarios.draws):
        path = out_dir / _draw_filename(r)
        write_table(path, ref.tickers, ref.dates, draw)
        paths.append(path)

    manifest = out_dir / "manifest.txt"
    lines = [
        f"draws={scenarios.n_draws}",
        f"past={scenarios.window.past}",
        f"future={scenarios.window.future}",
        f"assets={ref.n_assets}",
        f"days={ref.n_days}",
    ]
    if scenarios.checkpoint_digest:
        lines.append(f"checkpoint_sha256={scenarios.checkpoint_digest}")
    for r, s in enumerate(scenarios.seeds):
        lines.append(f"seed_{r:04d}={s}")
    manifest.write_text("\n".join(lines) + "\n")
    paths.append(manifest)
    return paths


def read_manifest(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}: bad manifest line {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_scenarios(out_dir: str | Path, reference: PriceMatrix) -> ScenarioSet:
    """Rebuild a scenario collection from an export directory and its reference."""
    out_dir = Path(out_dir)
    manifest = read_manifest(out_dir / "manifest.txt")
    n_draws = int(manifest["draws"])
    window = WindowConfig(int(manifest["past"]), int(manifest["future"]))
    draws = []
    for r in range(n_draws):
        tickers, dates, values = read_table(out_dir / _draw_filename(r))
        if tickers != reference.tickers or dates != reference.dates:
            raise DataError(f"{_draw_filename(r)} does not align with the reference")
        draws.append(values)
    seeds = [int(manifest[f"seed_{r:04d}"]) for r in range(n_draws)]
    return ScenarioSet(reference, window, draws, seeds,
                       manifest.get("checkpoint_sha256"))


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
