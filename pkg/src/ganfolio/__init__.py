"""Adversarial scenario generation for asset prices with portfolio backtests."""

from .autodiff import AdamState, ParamSet, Tape, Tensor, adam_step, grad, make_rng
from .data import (NormStats, PriceMatrix, WindowConfig, WindowSample,
                   denormalize, extract_window, inference_indices, load_prices,
                   normalize, save_prices, training_indices)
from .gan import (ACGAN, CGAN, GanBundle, LossRecord, TrainConfig,
                  build_networks, discriminator_loss, generate, generator_loss,
                  load_checkpoint, reconstruct, save_checkpoint, train)
from .portfolio import (AllocationWeights, BacktestReport, ReturnEstimate,
                        backtest, compare_report, estimate_returns, max_sharpe,
                        scenario_mean_strategy, sharpe_ratio)
from .scenarios import (ScenarioSet, export_scenarios, generate_scenarios,
                        load_scenarios)
from .stylized import (FactReport, autocorrelation, coarse_fine, cross_stats,
                       evaluate_scenarios, fact_report, leverage_effect,
                       log_returns, moments, pearson, tail_exponent)
from .synthetic import gbm_prices

__version__ = "0.1.0"
