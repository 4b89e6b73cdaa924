"""Command-line interface: train, generate, stats, backtest, report.

Configuration comes from built-in defaults, overlaid by an optional
``key = value`` text file (``--config``), overlaid by command-line flags;
flags always win. The ``GANFOLIO_OUT`` environment variable sets the default
output root. All diagnostics go to stderr; every data product is a file.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import portfolio as pf
from . import scenarios as sc
from . import stylized as sf
from .autodiff import make_rng
from .data import WindowConfig, load_prices
from .errors import ConfigError, GanfolioError, ShapeError
from .gan import (TrainConfig, build_networks, load_checkpoint,
                  save_checkpoint, train)

DEFAULTS: dict[str, object] = {
    "past": 40,
    "future": 20,
    "latent_dim": 100,
    "gp_weight": 10.0,
    "ae_weight": 3.0,
    "learning_rate": 2e-5,
    "beta1": 0.5,
    "beta2": 0.999,
    "epochs": 1000,
    "batch_size": 64,
    "critic_steps": 1,
    "mode": "acgan",
    "seed": 0,
    "draws": 1000,
    "eta": "10,15,20",
    "risk_free": 0.0,
    "periods_per_year": 252,
}

_FIELD_TYPES = {
    "past": int, "future": int, "latent_dim": int, "epochs": int,
    "batch_size": int, "critic_steps": int, "seed": int, "draws": int,
    "periods_per_year": int,
    "gp_weight": float, "ae_weight": float, "learning_rate": float,
    "beta1": float, "beta2": float, "risk_free": float,
    "mode": str, "eta": str, "train_file": str, "test_file": str,
    "checkpoint": str, "scenario_dir": str, "out": str, "backtest_dir": str,
    "benchmarks": str, "fixed_weights": str,
}


def read_config_file(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    text = Path(path).read_text()
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path} line {line_no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path} line {line_no}: unknown key {key!r}")
        out[key] = value
    return out


def merge_config(args: argparse.Namespace) -> dict[str, object]:
    merged: dict[str, object] = dict(DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        merged.update(read_config_file(config_path))
    for key, value in vars(args).items():
        if key in ("config", "command", "func") or value is None:
            continue
        merged[key] = value
    typed: dict[str, object] = {}
    for key, value in merged.items():
        caster = _FIELD_TYPES.get(key, str)
        try:
            typed[key] = caster(value)
        except (TypeError, ValueError):
            raise ConfigError(f"bad value for {key!r}: {value!r}") from None
    if typed.get("mode") not in ("cgan", "acgan"):
        raise ConfigError(f"mode must be cgan or acgan, got {typed.get('mode')!r}")
    return typed


def eta_list(cfg: dict) -> list[int]:
    try:
        values = [int(tok) for tok in str(cfg["eta"]).split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"bad eta list: {cfg['eta']!r}") from None
    if not values:
        raise ConfigError("eta list is empty")
    return values


def out_dir(cfg: dict) -> Path:
    root = cfg.get("out") or os.environ.get("GANFOLIO_OUT") or "ganfolio-out"
    path = Path(str(root))
    path.mkdir(parents=True, exist_ok=True)
    return path


def require(cfg: dict, key: str, command: str) -> str:
    value = cfg.get(key)
    if not value:
        raise ConfigError(f"'{command}' needs --{key.replace('_', '-')} "
                          f"(or config key {key})")
    return str(value)


def _fmt(value: float | None) -> str:
    return "undefined" if value is None else repr(float(value))


def _write_rows(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _echo_config(cfg: dict, path: Path) -> None:
    lines = [f"{key} = {cfg[key]}" for key in sorted(cfg)]
    path.write_text("\n".join(lines) + "\n")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


# -- commands -------------------------------------------------------------------------

def cmd_train(cfg: dict) -> int:
    prices = load_prices(require(cfg, "train_file", "train"))
    out = out_dir(cfg)
    window = WindowConfig(int(cfg["past"]), int(cfg["future"]))
    train_cfg = TrainConfig(
        gp_weight=float(cfg["gp_weight"]), ae_weight=float(cfg["ae_weight"]),
        learning_rate=float(cfg["learning_rate"]), beta1=float(cfg["beta1"]),
        beta2=float(cfg["beta2"]), epochs=int(cfg["epochs"]),
        latent_dim=int(cfg["latent_dim"]), seed=int(cfg["seed"]),
        critic_steps=int(cfg["critic_steps"]), batch_size=int(cfg["batch_size"]))

    rng = make_rng(train_cfg.seed)
    bundle = build_networks(prices.n_assets, window, train_cfg.latent_dim,
                            str(cfg["mode"]), rng)
    checkpoint = out / "checkpoint.ckpt"
    every = max(1, train_cfg.epochs // 10)

    def progress(record):
        if record.epoch == 1 or record.epoch % every == 0:
            ap = "" if record.autoencoding_penalty is None else \
                f" ap={record.autoencoding_penalty:.6f}"
            _log(f"epoch {record.epoch}/{train_cfg.epochs} "
                 f"gap={record.critic_gap:.6f} penalty={record.gradient_penalty:.6f}"
                 f" score={record.generator_score:.6f}{ap}")

    history = train(bundle, prices, train_cfg, rng=rng,
                    checkpoint_path=checkpoint, progress=progress)
    save_checkpoint(bundle, checkpoint, config=train_cfg)
    _write_rows(out / "losses.csv",
                ["epoch", "critic_gap", "gradient_penalty", "generator_score",
                 "autoencoding_penalty"],
                [[r.epoch, repr(r.critic_gap), repr(r.gradient_penalty),
                  repr(r.generator_score), _fmt(r.autoencoding_penalty)]
                 for r in history])
    _echo_config(cfg, out / "train_config.txt")
    _log(f"checkpoint written to {checkpoint}")
    return 0


def cmd_generate(cfg: dict) -> int:
    checkpoint = require(cfg, "checkpoint", "generate")
    bundle = load_checkpoint(checkpoint)
    prices = load_prices(require(cfg, "test_file", "generate"))
    if bundle.n_assets != prices.n_assets:
        raise ShapeError(f"checkpoint is for {bundle.n_assets} assets, test file "
                         f"has {prices.n_assets}")
    out = out_dir(cfg)
    scen = sc.generate_scenarios(bundle, prices, bundle.window, int(cfg["draws"]),
                                 seed=int(cfg["seed"]))
    scen.checkpoint_digest = sc.file_digest(checkpoint)
    paths = sc.export_scenarios(scen, out)
    _log(f"wrote {len(paths) - 1} scenario files and manifest to {out}")
    return 0


def cmd_stats(cfg: dict) -> int:
    prices = load_prices(require(cfg, "test_file", "stats"))
    scen = sc.load_scenarios(require(cfg, "scenario_dir", "stats"), prices)
    out = out_dir(cfg)
    ev = sf.evaluate_scenarios(scen)

    real_rows = ev.real.mean_rows()
    synth_rows = ev.synthetic_mean_rows()
    names = list(sf.FactReport.ROW_NAMES) + list(sf.FactReport.CROSS_ROW_NAMES)
    _write_rows(out / "stats_summary.csv", ["statistic", "real", "synthetic"],
                [[name, _fmt(real_rows.get(name)), _fmt(synth_rows.get(name))]
                 for name in names if name in real_rows or name in synth_rows])
    _write_rows(out / "pearson.csv", ["asset", "mean_pearson"],
                [[asset, _fmt(val)] for asset, val in ev.pearson_by_asset.items()])

    per_asset_rows = []
    for facts in ev.real.assets:
        per_asset_rows.append([facts.label, _fmt(facts.autocorrelation),
                               _fmt(facts.tail_alpha), _fmt(facts.leverage),
                               _fmt(facts.coarse_fine), _fmt(facts.kurtosis),
                               _fmt(facts.skewness)])
    _write_rows(out / "facts_real_assets.csv",
                ["asset"] + [n.lower().replace(" ", "_")
                             for n in sf.FactReport.ROW_NAMES],
                per_asset_rows)
    _log(f"statistics written to {out}")
    return 0


def cmd_backtest(cfg: dict) -> int:
    prices = load_prices(require(cfg, "test_file", "backtest"))
    out = out_dir(cfg)
    past = int(cfg["past"])
    risk_free = float(cfg["risk_free"])
    periods = int(cfg["periods_per_year"])

    scen = None
    if cfg.get("scenario_dir"):
        scen = sc.load_scenarios(str(cfg["scenario_dir"]), prices)
        past = scen.window.past  # conditioning length comes with the scenarios

    summary, equity_rows, scatter = [], [], []
    for eta in eta_list(cfg):
        reports = []
        days = pf.rebalance_days(prices.n_days, past, eta)
        reports.append(pf.backtest(prices, pf.markowitz_strategy(
            prices, past, risk_free), eta, past, risk_free, periods))

        if scen is not None:
            table = pf.scenario_weight_table(scen, days, eta, risk_free)
            mode = str(cfg["mode"])
            reports.append(pf.backtest(
                prices, pf.scenario_mean_strategy(scen, eta, risk_free,
                                                  f"{mode}-mean", table),
                eta, past, risk_free, periods))
            for r in range(scen.n_draws):
                strat = pf.scenario_draw_strategy(scen, r, eta, risk_free,
                                                  table=table)
                rep = pf.backtest(prices, strat, eta, past, risk_free, periods)
                scatter.append([f"{mode}-draw", eta, r, repr(rep.annual_return),
                                _fmt(rep.sharpe)])

        if cfg.get("fixed_weights"):
            w = np.array([float(tok) for tok in str(cfg["fixed_weights"]).split(",")])
            if w.size != prices.n_assets:
                raise ConfigError(f"fixed weights need {prices.n_assets} entries")
            reports.append(pf.backtest(prices, pf.fixed_weights_strategy(
                w / w.sum(), "fixed"), eta, past, risk_free, periods))

        benchmarks = [t for t in str(cfg.get("benchmarks", "")).split(",") if t]
        comp = pf.compare_report(reports, prices=prices,
                                 benchmarks=benchmarks or None,
                                 past=past if benchmarks else None)
        for row in comp.rows:
            summary.append([row.label, eta, repr(row.annual_return),
                            _fmt(row.sharpe), repr(row.final_value)])
        for label, curve in comp.curves.items():
            for day, value in zip(comp.days, curve):
                equity_rows.append([int(day), label, eta, repr(float(value))])

    _write_rows(out / "summary.csv",
                ["strategy", "eta", "annual_return", "sharpe", "final_value"],
                summary)
    _write_rows(out / "equity.csv", ["day", "strategy", "eta", "value"], equity_rows)
    if scatter:
        _write_rows(out / "scatter.csv",
                    ["strategy", "eta", "draw", "annual_return", "sharpe"], scatter)
    _log(f"backtest reports written to {out}")
    return 0


def cmd_report(cfg: dict) -> int:
    src = Path(require(cfg, "backtest_dir", "report"))
    out = out_dir(cfg)
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "ganfolio"  # reproducible ids

    def read_csv(path: Path) -> list[dict]:
        with path.open(newline="") as fh:
            return list(csv.DictReader(fh))

    equity = read_csv(src / "equity.csv")
    summary = read_csv(src / "summary.csv")
    etas = sorted({int(row["eta"]) for row in equity})
    written = []
    for eta in etas:
        fig, ax = plt.subplots(figsize=(8, 4.5))
        labels = sorted({row["strategy"] for row in equity
                         if int(row["eta"]) == eta})
        for label in labels:
            pts = [(int(r["day"]), float(r["value"])) for r in equity
                   if r["strategy"] == label and int(r["eta"]) == eta]
            pts.sort()
            style = "--" if label.startswith("hold ") else "-"
            ax.plot([p[0] for p in pts], [p[1] for p in pts], style, label=label)
        ax.set_xlabel("trading day")
        ax.set_ylabel("portfolio value")
        ax.set_title(f"rebalance every {eta} days")
        ax.legend(fontsize=8)
        path = out / f"equity_eta{eta}.svg"
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)
        written.append(path)

    scatter_file = src / "scatter.csv"
    if scatter_file.exists():
        scatter = read_csv(scatter_file)
        for eta in sorted({int(r["eta"]) for r in scatter}):
            fig, ax = plt.subplots(figsize=(6, 4.5))
            for label in sorted({r["strategy"] for r in scatter}):
                xs = [float(r["annual_return"]) for r in scatter
                      if r["strategy"] == label and int(r["eta"]) == eta
                      and r["sharpe"] != "undefined"]
                ys = [float(r["sharpe"]) for r in scatter
                      if r["strategy"] == label and int(r["eta"]) == eta
                      and r["sharpe"] != "undefined"]
                ax.scatter(xs, ys, s=6, alpha=0.5, label=label)
            for row in summary:
                if int(row["eta"]) != eta or row["sharpe"] == "undefined":
                    continue
                ax.scatter([float(row["annual_return"])], [float(row["sharpe"])],
                           marker="x", s=60, label=row["strategy"])
            ax.set_xlabel("annual return")
            ax.set_ylabel("Sharpe ratio")
            ax.set_title(f"return vs Sharpe, rebalance every {eta} days")
            ax.legend(fontsize=7)
            path = out / f"scatter_eta{eta}.svg"
            fig.savefig(path, metadata={"Date": None})
            plt.close(fig)
            written.append(path)

    _write_rows(out / "comparison.csv",
                ["strategy", "eta", "annual_return", "sharpe", "final_value"],
                [[r["strategy"], r["eta"], r["annual_return"], r["sharpe"],
                  r["final_value"]] for r in summary])
    _log(f"wrote {len(written)} charts to {out}")
    return 0


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ganfolio",
        description="Train scenario generators on price histories, synthesize "
                    "future paths, score their realism, and backtest allocations.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out", help="output directory (default: $GANFOLIO_OUT)")
        p.add_argument("--seed", type=int, help="random seed")

    p_train = sub.add_parser("train", help="train a scenario model")
    common(p_train)
    p_train.add_argument("--train-file", dest="train_file", help="training price CSV")
    p_train.add_argument("--mode", choices=["cgan", "acgan"])
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--past", type=int, help="conditioning days per window")
    p_train.add_argument("--future", type=int, help="generated days per window")
    p_train.add_argument("--latent-dim", dest="latent_dim", type=int)
    p_train.add_argument("--gp-weight", dest="gp_weight", type=float)
    p_train.add_argument("--ae-weight", dest="ae_weight", type=float)
    p_train.add_argument("--learning-rate", dest="learning_rate", type=float)
    p_train.add_argument("--batch-size", dest="batch_size", type=int)
    p_train.add_argument("--critic-steps", dest="critic_steps", type=int)
    p_train.set_defaults(func=cmd_train)

    p_gen = sub.add_parser("generate", help="synthesize scenario files")
    common(p_gen)
    p_gen.add_argument("--checkpoint", help="trained model checkpoint")
    p_gen.add_argument("--test-file", dest="test_file", help="test price CSV")
    p_gen.add_argument("--draws", type=int, help="number of synthetic series")
    p_gen.set_defaults(func=cmd_generate)

    p_stats = sub.add_parser("stats", help="stylized-fact and correlation reports")
    common(p_stats)
    p_stats.add_argument("--test-file", dest="test_file")
    p_stats.add_argument("--scenario-dir", dest="scenario_dir",
                         help="directory produced by 'generate'")
    p_stats.set_defaults(func=cmd_stats)

    p_bt = sub.add_parser("backtest", help="rebalanced allocation backtests")
    common(p_bt)
    p_bt.add_argument("--test-file", dest="test_file")
    p_bt.add_argument("--scenario-dir", dest="scenario_dir",
                      help="scenario directory; omit for trailing-window only")
    p_bt.add_argument("--eta", help="comma-separated rebalance intervals")
    p_bt.add_argument("--past", type=int, help="conditioning days (no scenarios)")
    p_bt.add_argument("--mode", choices=["cgan", "acgan"],
                      help="label for scenario strategies")
    p_bt.add_argument("--benchmarks", help="comma-separated buy-and-hold tickers")
    p_bt.add_argument("--fixed-weights", dest="fixed_weights",
                      help="comma-separated fixed allocation")
    p_bt.set_defaults(func=cmd_backtest)

    p_rep = sub.add_parser("report", help="render charts from backtest output")
    common(p_rep)
    p_rep.add_argument("--backtest-dir", dest="backtest_dir",
                       help="directory produced by 'backtest'")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = merge_config(args)
        return args.func(cfg)
    except GanfolioError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
