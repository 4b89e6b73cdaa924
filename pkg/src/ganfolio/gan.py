"""Adversarial scenario models: network wiring, losses, training, checkpoints.

Two generator families share one discriminator design:

* plain conditional mode (``cgan``): a conditioner compresses the flattened
  history into a 16-wide feature vector that, together with a latent draw,
  feeds the simulator producing the future block;
* autoencoding mode (``acgan``): the same conditioner (now called encoder)
  additionally feeds a decoder that must reconstruct the history, and the
  mean-squared reconstruction error joins the generator objective. The extra
  term keeps the learned features informative about the history itself.

The critic objective is the Wasserstein form with a gradient penalty pulling
the critic's input-gradient norm toward one on random interpolates between
real and generated windows.

Discriminator inputs are laid out as ``[flattened history | flattened
future]``; within each part, rows are concatenated asset by asset.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import LayerSpec, ParamSet, Tensor
from .data import PriceMatrix, WindowConfig, extract_window, training_indices
from .errors import (CheckpointError, ConfigError, ModeError, NonFiniteError,
                     ShapeError, TrainingAborted)

CGAN = "cgan"
ACGAN = "acgan"
FEATURE_WIDTH = 16  # conditioner output width


# -- configuration -----------------------------------------------------------------

@dataclass
class TrainConfig:
    """Hyperparameters of the adversarial training loop."""

    gp_weight: float = 10.0  # gradient-penalty strength
    ae_weight: float = 3.0  # autoencoding-penalty strength (acgan only)
    learning_rate: float = 2e-5
    beta1: float = 0.5
    beta2: float = 0.999
    epochs: int = 1000
    latent_dim: int = 100
    seed: int = 0
    critic_steps: int = 1
    batch_size: int = 64

    def __post_init__(self):
        if self.gp_weight < 0 or self.ae_weight < 0:
            raise ConfigError("penalty weights must be non-negative")
        if self.latent_dim < 1:
            raise ConfigError("latent dimension must be >= 1")
        if self.epochs < 1:
            raise ConfigError("epoch count must be >= 1")
        if self.critic_steps < 1 or self.batch_size < 1:
            raise ConfigError("critic steps and batch size must be >= 1")


# -- network construction -----------------------------------------------------------

def conditioner_specs(n_assets: int, past: int) -> list[LayerSpec]:
    width = n_assets * past
    return [
        LayerSpec(width, 512, "leaky_rectifier", 0.2),
        LayerSpec(512, 512, "leaky_rectifier", 0.2),
        LayerSpec(512, FEATURE_WIDTH, None, input_dropout=0.4),
    ]


def decoder_specs(n_assets: int, past: int) -> list[LayerSpec]:
    return [
        LayerSpec(FEATURE_WIDTH, 512, "leaky_rectifier", 0.2),
        LayerSpec(512, 512, "leaky_rectifier", 0.2),
        LayerSpec(512, n_assets * past, None, input_dropout=0.4),
    ]


def simulator_specs(n_assets: int, future: int, latent_dim: int) -> list[LayerSpec]:
    return [
        LayerSpec(latent_dim + FEATURE_WIDTH, 128, "leaky_rectifier", 0.2),
        LayerSpec(128, 256, "leaky_rectifier", 0.2),
        LayerSpec(256, 512, "leaky_rectifier", 0.2),
        LayerSpec(512, 1024, "leaky_rectifier", 0.2),
        LayerSpec(1024, n_assets * future, "tanh"),
    ]


def discriminator_specs(n_assets: int, width: int) -> list[LayerSpec]:
    # A 512-to-256 stage sits between the dropout and the following 256-wide
    # layer so that consecutive widths chain.
    return [
        LayerSpec(n_assets * width, 512, "leaky_rectifier", 0.2),
        LayerSpec(512, 512, "leaky_rectifier", 0.2),
        LayerSpec(512, 256, "leaky_rectifier", 0.2, input_dropout=0.4),
        LayerSpec(256, 512, "leaky_rectifier", 0.2),
        LayerSpec(512, 1, None),
    ]


@dataclass
class GanBundle:
    """The trainable networks of one scenario model plus its dimensions."""

    mode: str
    n_assets: int
    window: WindowConfig
    latent_dim: int
    encoder: ParamSet
    simulator: ParamSet
    discriminator: ParamSet
    decoder: ParamSet | None = None
    trained: bool = False

    def __post_init__(self):
        if self.mode not in (CGAN, ACGAN):
            raise ConfigError(f"mode must be '{CGAN}' or '{ACGAN}', got {self.mode!r}")
        if (self.decoder is not None) != (self.mode == ACGAN):
            raise ModeError(f"decoder must be present exactly in {ACGAN} mode")
        if self.encoder.out_dim != FEATURE_WIDTH:
            raise ShapeError(f"conditioner must emit {FEATURE_WIDTH} features, "
                             f"got {self.encoder.out_dim}")
        if self.simulator.in_dim != self.latent_dim + FEATURE_WIDTH:
            raise ShapeError(f"simulator input {self.simulator.in_dim} does not "
                             f"match latent {self.latent_dim} + {FEATURE_WIDTH}")
        if self.decoder is not None and self.decoder.in_dim != FEATURE_WIDTH:
            raise ShapeError(f"decoder input {self.decoder.in_dim} must be "
                             f"{FEATURE_WIDTH}")

    def generator_params(self) -> list[Tensor]:
        """Parameters updated by the generator objective, in a fixed order."""
        out = self.encoder.parameters() + self.simulator.parameters()
        if self.decoder is not None:
            out += self.decoder.parameters()
        return out

    def networks(self) -> dict[str, ParamSet]:
        nets = {"encoder": self.encoder, "simulator": self.simulator,
                "discriminator": self.discriminator}
        if self.decoder is not None:
            nets["decoder"] = self.decoder
        return nets


def build_networks(n_assets: int, window: WindowConfig, latent_dim: int,
                   mode: str, rng: np.random.Generator) -> GanBundle:
    """Assemble the full bundle with fan-in-scaled uniform initial weights."""
    if n_assets < 1:
        raise ConfigError(f"need at least one asset, got {n_assets}")
    if latent_dim < 1:
        raise ConfigError(f"latent dimension must be >= 1, got {latent_dim}")
    if mode not in (CGAN, ACGAN):
        raise ConfigError(f"mode must be '{CGAN}' or '{ACGAN}', got {mode!r}")
    encoder = ParamSet.from_specs(conditioner_specs(n_assets, window.past), rng)
    decoder = None
    if mode == ACGAN:
        decoder = ParamSet.from_specs(decoder_specs(n_assets, window.past), rng)
    simulator = ParamSet.from_specs(simulator_specs(n_assets, window.future, latent_dim), rng)
    discriminator = ParamSet.from_specs(discriminator_specs(n_assets, window.width), rng)
    return GanBundle(mode, n_assets, window, latent_dim,
                     encoder, simulator, discriminator, decoder)


# -- shape plumbing ------------------------------------------------------------------

def _flat_batch(x: np.ndarray, n_assets: int, n_cols: int, what: str) -> np.ndarray:
    """Accept (assets, cols), (batch, assets, cols) or already-flat input."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2 and x.shape == (n_assets, n_cols):
        return x.reshape(1, n_assets * n_cols)
    if x.ndim == 3 and x.shape[1:] == (n_assets, n_cols):
        return x.reshape(x.shape[0], n_assets * n_cols)
    if x.ndim == 2 and x.shape[1] == n_assets * n_cols:
        return x
    raise ShapeError(f"{what} must have shape ({n_assets}, {n_cols}) per sample, "
                     f"got {x.shape}")


def _split_window_flat(flat: np.ndarray, n_assets: int, window: WindowConfig) -> np.ndarray:
    """Re-pack per-sample (assets, width) windows into the critic layout."""
    b = flat.shape[0]
    cube = flat.reshape(b, n_assets, window.width)
    hist = cube[:, :, :window.past].reshape(b, -1)
    fut = cube[:, :, window.past:].reshape(b, -1)
    return np.concatenate([hist, fut], axis=1)


def critic_input(bundle: GanBundle, windows: np.ndarray) -> np.ndarray:
    """Flatten full (history | future) windows into discriminator input rows."""
    flat = _flat_batch(windows, bundle.n_assets, bundle.window.width, "window")
    return _split_window_flat(flat, bundle.n_assets, bundle.window)


# -- inference ------------------------------------------------------------------------

def generate(bundle: GanBundle, z: np.ndarray, history: np.ndarray, *,
             mode: str = "infer", rng: np.random.Generator | None = None) -> np.ndarray:
    """Produce one future block (assets x future days) in the normalized band.

    The final squashing activation keeps every value strictly inside (-1, 1).
    """
    z = np.asarray(z, dtype=np.float64).reshape(1, -1)
    if z.shape[1] != bundle.latent_dim:
        raise ShapeError(f"latent draw has width {z.shape[1]}, "
                         f"expected {bundle.latent_dim}")
    hist = _flat_batch(history, bundle.n_assets, bundle.window.past, "history")
    if hist.shape[0] != 1:
        raise ShapeError("generate takes a single window; use generate_batch")
    out = generate_batch(bundle, z, hist, mode=mode, rng=rng)
    return out.reshape(bundle.n_assets, bundle.window.future)


def generate_batch(bundle: GanBundle, z: np.ndarray, hist_flat: np.ndarray, *,
                   mode: str = "infer", rng: np.random.Generator | None = None) -> np.ndarray:
    features = ad.run_network_values(bundle.encoder, hist_flat, mode=mode, rng=rng)
    sim_in = np.concatenate([z, features], axis=1)
    return ad.run_network_values(bundle.simulator, sim_in, mode=mode, rng=rng)


def reconstruct(bundle: GanBundle, history: np.ndarray, *,
                mode: str = "infer", rng: np.random.Generator | None = None) -> np.ndarray:
    """Decode the encoded history back to its own shape (autoencoding mode only)."""
    if bundle.decoder is None:
        raise ModeError("reconstruction requires an autoencoding-mode bundle")
    hist = _flat_batch(history, bundle.n_assets, bundle.window.past, "history")
    features = ad.run_network_values(bundle.encoder, hist, mode=mode, rng=rng)
    out = ad.run_network_values(bundle.decoder, features, mode=mode, rng=rng)
    if out.shape[0] == 1 and np.asarray(history).ndim == 2:
        return out.reshape(bundle.n_assets, bundle.window.past)
    return out


# -- losses ----------------------------------------------------------------------------

@dataclass
class GeneratorLossResult:
    total: float
    score: float  # mean critic output on generated windows
    autoencoding_penalty: float | None
    gradients: list[np.ndarray]  # aligned with bundle.generator_params()


@dataclass
class CriticLossResult:
    total: float
    critic_gap: float  # mean critic output on real minus generated windows
    gradient_penalty: float  # unweighted penalty term
    gradients: list[np.ndarray]  # aligned with bundle.discriminator.parameters()


def generator_loss(bundle: GanBundle, history: np.ndarray, z: np.ndarray,
                   ae_weight: float, *, mode: str = "train",
                   rng: np.random.Generator | None = None) -> GeneratorLossResult:
    """Generator objective and its gradients; critic parameters stay frozen.

    Minimizes ``-mean(critic(generated)) + ae_weight * mse(decoded, history)``.
    With ``ae_weight`` zero, or in plain conditional mode, only the critic
    score term remains.
    """
    hist = ad.constant(_flat_batch(history, bundle.n_assets, bundle.window.past,
                                   "history"))
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z.reshape(1, -1)
    if z.shape != (hist.shape[0], bundle.latent_dim):
        raise ShapeError(f"latent batch {z.shape} does not match "
                         f"({hist.shape[0]}, {bundle.latent_dim})")

    features = ad.run_network(bundle.encoder, hist, mode=mode, rng=rng)
    fake_future = ad.run_network(bundle.simulator,
                                 ad.concat_cols(ad.constant(z), features),
                                 mode=mode, rng=rng)
    score = ad.mean_all(ad.run_network(bundle.discriminator,
                                       ad.concat_cols(hist, fake_future),
                                       mode=mode, rng=rng))
    loss = ad.neg(score)

    ap_value = None
    if bundle.mode == ACGAN:
        decoded = ad.run_network(bundle.decoder, features, mode=mode, rng=rng)
        ap = ad.mean_squared_error(decoded, hist)
        ap_value = ap.item()
        if ae_weight != 0.0:
            loss = ad.add(loss, ad.scale(ap, ae_weight))

    params = bundle.generator_params()
    grads = [g.data for g in ad.grad(loss, params)]
    return GeneratorLossResult(loss.item(), score.item(), ap_value, grads)


def discriminator_loss(bundle: GanBundle, real: np.ndarray, fake: np.ndarray,
                       eps: np.ndarray, gp_weight: float, *, mode: str = "train",
                       rng: np.random.Generator | None = None) -> CriticLossResult:
    """Critic objective and its gradients with the interpolation penalty.

    Minimizes ``-(mean critic(real) - mean critic(fake)) + gp_weight *
    mean((|grad critic(interp)| - 1)^2)`` where each interpolate mixes a real
    and a generated window with its own uniform coefficient. The penalty's
    input gradient is recorded on the graph, so its parameter gradients are
    exact rather than approximated.
    """
    real_rows = critic_input(bundle, real)
    fake_rows = critic_input(bundle, fake)
    if real_rows.shape != fake_rows.shape:
        raise ShapeError(f"real {real_rows.shape} vs generated {fake_rows.shape}")
    b = real_rows.shape[0]
    eps = np.asarray(eps, dtype=np.float64).reshape(b, 1)
    if ((eps < 0) | (eps > 1)).any():
        raise ConfigError("interpolation coefficients must lie in [0, 1]")

    # real and generated rows share one critic pass; signed weights turn the
    # summed output into the mean gap
    both = ad.constant(np.vstack([real_rows, fake_rows]))
    signs = np.concatenate([np.full(b, 1.0 / b), np.full(b, -1.0 / b)])[:, None]
    out = ad.run_network(bundle.discriminator, both, mode=mode, rng=rng)
    gap = ad.sum_all(ad.mul(out, ad.constant(np.broadcast_to(signs, out.shape))))
    loss = ad.neg(gap)

    interp = eps * real_rows + (1.0 - eps) * fake_rows
    x_leaf = ad.leaf(interp)
    interp_out = ad.run_network(bundle.discriminator, x_leaf, mode=mode, rng=rng)
    in_grad = ad.grad(ad.sum_all(interp_out), [x_leaf])[0]
    penalty = ad.mean_all(ad.square(ad.shift(ad.row_l2_norm(in_grad), -1.0)))
    if gp_weight != 0.0:
        loss = ad.add(loss, ad.scale(penalty, gp_weight))

    params = bundle.discriminator.parameters()
    grads = [g.data for g in ad.grad(loss, params)]
    return CriticLossResult(loss.item(), gap.item(), penalty.item(), grads)


# -- training loop -----------------------------------------------------------------------

@dataclass
class LossRecord:
    """Per-epoch means of every objective term."""

    epoch: int
    critic_gap: float
    gradient_penalty: float
    generator_score: float
    autoencoding_penalty: float | None


@dataclass
class _EpochAccumulator:
    gap: float = 0.0
    penalty: float = 0.0
    score: float = 0.0
    ap: float = 0.0
    batches: int = 0

    def record(self, epoch: int, acgan: bool) -> LossRecord:
        n = max(self.batches, 1)
        return LossRecord(epoch, self.gap / n, self.penalty / n, self.score / n,
                          (self.ap / n) if acgan else None)


def train(bundle: GanBundle, prices: PriceMatrix, cfg: TrainConfig, *,
          rng: np.random.Generator,
          checkpoint_path: str | Path | None = None,
          progress: "callable | None" = None) -> list[LossRecord]:
    """Adversarial training over every sliding window of the history.

    Each epoch shuffles the window start positions, then for every minibatch
    runs one generator update followed by ``critic_steps`` critic updates on
    freshly generated windows. Returns one loss record per epoch. A loss
    going non-finite aborts training; if a checkpoint path is given, the last
    parameters are persisted before the abort (and on keyboard interrupt).
    """
    window = bundle.window
    if prices.n_assets != bundle.n_assets:
        raise ShapeError(f"bundle expects {bundle.n_assets} assets, "
                         f"data has {prices.n_assets}")
    starts = training_indices(prices.n_days, window.width)
    samples = [extract_window(prices, int(i), window) for i in starts]
    hist_all = np.stack([s.history.reshape(-1) for s in samples])
    windows_all = np.stack([np.concatenate([s.history, s.future], axis=1)
                            for s in samples])  # (n, assets, width)

    gen_view = _generator_view(bundle)
    opt_gen = ad.AdamState.for_params(gen_view, cfg.learning_rate,
                                      cfg.beta1, cfg.beta2)
    opt_disc = ad.AdamState.for_params(bundle.discriminator, cfg.learning_rate,
                                       cfg.beta1, cfg.beta2)

    history: list[LossRecord] = []
    acgan = bundle.mode == ACGAN
    try:
        for epoch in range(1, cfg.epochs + 1):
            order = rng.permutation(len(samples))
            acc = _EpochAccumulator()
            for lo in range(0, len(order), cfg.batch_size):
                batch = order[lo:lo + cfg.batch_size]
                hist = hist_all[batch]
                real = windows_all[batch]
                nb = len(batch)
                try:
                    z = rng.standard_normal((nb, cfg.latent_dim))
                    gen = generator_loss(bundle, hist, z, cfg.ae_weight,
                                         mode="train", rng=rng)
                    ad.adam_step(gen_view, gen.gradients, opt_gen)

                    for _ in range(cfg.critic_steps):
                        z2 = rng.standard_normal((nb, cfg.latent_dim))
                        fake_future = generate_batch(bundle, z2, hist,
                                                     mode="train", rng=rng)
                        fake = np.concatenate(
                            [hist.reshape(nb, bundle.n_assets, window.past),
                             fake_future.reshape(nb, bundle.n_assets, window.future)],
                            axis=2)
                        eps = rng.random((nb, 1))
                        disc = discriminator_loss(bundle, real, fake, eps,
                                                  cfg.gp_weight, mode="train", rng=rng)
                        ad.adam_step(bundle.discriminator, disc.gradients, opt_disc)
                except NonFiniteError as exc:
                    raise TrainingAborted(
                        f"non-finite loss at epoch {epoch}, "
                        f"window start {int(starts[order[lo]])}: {exc}",
                        epoch=epoch, index=int(starts[order[lo]])) from exc

                acc.gap += disc.critic_gap
                acc.penalty += disc.gradient_penalty
                acc.score += gen.score
                if acgan:
                    acc.ap += gen.autoencoding_penalty
                acc.batches += 1
            record = acc.record(epoch, acgan)
            history.append(record)
            if progress is not None:
                progress(record)
    except (TrainingAborted, KeyboardInterrupt):
        if checkpoint_path is not None:
            save_checkpoint(bundle, checkpoint_path, config=cfg)
        raise
    bundle.trained = True
    return history


def _generator_view(bundle: GanBundle) -> ParamSet:
    """All generator-side layers as one parameter set, matching
    ``GanBundle.generator_params`` order."""
    layers = list(bundle.encoder.layers) + list(bundle.simulator.layers)
    if bundle.decoder is not None:
        layers += list(bundle.decoder.layers)
    return ParamSet(layers)


# -- checkpoints -----------------------------------------------------------------------

_MAGIC = b"ACG1"
_VERSION = 1
_ACTIVATION_CODES = {None: 0, "leaky_rectifier": 1, "tanh": 2}
_ACTIVATION_NAMES = {v: k for k, v in _ACTIVATION_CODES.items()}


def save_checkpoint(bundle: GanBundle, path: str | Path,
                    config: TrainConfig | None = None) -> None:
    """Write every parameter bit-exactly, with a self-describing header."""
    path = Path(path)
    echo = {
        "mode": bundle.mode,
        "n_assets": bundle.n_assets,
        "past": bundle.window.past,
        "future": bundle.window.future,
        "latent_dim": bundle.latent_dim,
    }
    if config is not None:
        echo["train_config"] = {k: getattr(config, k) for k in
                                ("gp_weight", "ae_weight", "learning_rate", "beta1",
                                 "beta2", "epochs", "latent_dim", "seed",
                                 "critic_steps", "batch_size")}
    echo_bytes = json.dumps(echo, sort_keys=True).encode()

    with path.open("wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HBB", _VERSION, 1 if bundle.mode == ACGAN else 0,
                             1 if bundle.trained else 0))
        fh.write(struct.pack("<4I", bundle.n_assets, bundle.window.past,
                             bundle.window.future, bundle.latent_dim))
        fh.write(struct.pack("<I", len(echo_bytes)))
        fh.write(echo_bytes)
        for name in ("encoder", "decoder", "simulator", "discriminator"):
            net = bundle.networks().get(name)
            if net is None:
                continue
            fh.write(struct.pack("<I", len(net.layers)))
            for layer in net.layers:
                spec = layer.spec
                fh.write(struct.pack("<IIBdd", spec.in_dim, spec.out_dim,
                                     _ACTIVATION_CODES[spec.activation],
                                     spec.slope, spec.input_dropout))
                fh.write(layer.weights.data.astype("<f8").tobytes())
                fh.write(layer.bias.data.astype("<f8").tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise CheckpointError(f"checkpoint truncated while reading {what}")
    return buf


def load_checkpoint(path: str | Path, expect_mode: str | None = None) -> GanBundle:
    """Restore a bundle, verifying magic, version, mode, and dimensions."""
    path = Path(path)
    with path.open("rb") as fh:
        if _read_exact(fh, 4, "magic") != _MAGIC:
            raise CheckpointError(f"{path}: not a scenario-model checkpoint")
        version, mode_byte, trained_byte = struct.unpack(
            "<HBB", _read_exact(fh, 4, "header"))
        if version != _VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
        mode = ACGAN if mode_byte else CGAN
        if expect_mode is not None and mode != expect_mode:
            raise ModeError(f"{path}: checkpoint is {mode}, expected {expect_mode}")
        n_assets, past, future, latent = struct.unpack("<4I", _read_exact(fh, 16, "dims"))
        echo_len = struct.unpack("<I", _read_exact(fh, 4, "config length"))[0]
        _read_exact(fh, echo_len, "config echo")  # provenance only

        nets: dict[str, ParamSet] = {}
        names = ["encoder"] + (["decoder"] if mode == ACGAN else []) \
            + ["simulator", "discriminator"]
        for name in names:
            n_layers = struct.unpack("<I", _read_exact(fh, 4, f"{name} layer count"))[0]
            layers = []
            for li in range(n_layers):
                in_dim, out_dim, act, slope, drop = struct.unpack(
                    "<IIBdd", _read_exact(fh, 25, f"{name} layer {li} header"))
                if act not in _ACTIVATION_NAMES:
                    raise CheckpointError(f"{path}: unknown activation code {act}")
                w = np.frombuffer(_read_exact(fh, 8 * in_dim * out_dim,
                                              f"{name} layer {li} weights"),
                                  dtype="<f8").reshape(in_dim, out_dim)
                b = np.frombuffer(_read_exact(fh, 8 * out_dim,
                                              f"{name} layer {li} bias"),
                                  dtype="<f8").reshape(1, out_dim)
                layers.append(ad.DenseLayer(ad.leaf(w.copy()), ad.leaf(b.copy()),
                                            _ACTIVATION_NAMES[act], slope, drop))
            nets[name] = ParamSet(layers)
        if fh.read(1):
            raise CheckpointError(f"{path}: trailing bytes after parameter data")

    window = WindowConfig(past, future)
    bundle = GanBundle(mode, n_assets, window, latent,
                       nets["encoder"], nets["simulator"], nets["discriminator"],
                       nets.get("decoder"), trained=bool(trained_byte))
    _validate_dims(bundle, path)
    return bundle


def _validate_dims(bundle: GanBundle, path: Path) -> None:
    checks = [
        (bundle.encoder.in_dim, bundle.n_assets * bundle.window.past, "encoder input"),
        (bundle.encoder.out_dim, FEATURE_WIDTH, "encoder output"),
        (bundle.simulator.in_dim, bundle.latent_dim + FEATURE_WIDTH, "simulator input"),
        (bundle.simulator.out_dim, bundle.n_assets * bundle.window.future,
         "simulator output"),
        (bundle.discriminator.in_dim, bundle.n_assets * bundle.window.width,
         "discriminator input"),
        (bundle.discriminator.out_dim, 1, "discriminator output"),
    ]
    if bundle.decoder is not None:
        checks.append((bundle.decoder.in_dim, FEATURE_WIDTH, "decoder input"))
        checks.append((bundle.decoder.out_dim, bundle.n_assets * bundle.window.past,
                       "decoder output"))
    for got, want, what in checks:
        if got != want:
            raise CheckpointError(f"{path}: {what} width {got} does not match "
                                  f"header dimensions (expected {want})")
