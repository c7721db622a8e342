"""Training driver: epoch loop, metrics, checkpoints, and sample grids.

A run is fully determined by its config: model weights, latent draws, epoch
shuffles, and evaluation batches all derive from ``cfg.seed`` through named
:class:`PortableRng` streams, so two runs with equal configs produce
byte-identical metric CSVs (enable ``fixed_clock`` to also pin the wallclock
column) and checkpoint resume continues the exact trajectory.

Divergence (non-finite or exploding loss) aborts with
:class:`DivergenceError` rather than letting NaNs propagate silently.
"""

from __future__ import annotations

import os
import time

import numpy as np

from .config import GanConfig, build_schedule
from .data import ImageDataset, SyntheticSpec, load_image_directory, load_synthetic
from .errors import DivergenceError
from .fid import FeatureExtractor, extract_features, fid, fit_stats
from .losses import GanLoss
from .models import (Discriminator, Generator, build_discriminator,
                     build_generator, sample_latents)
from .octave import BetaSchedule, set_soft_betas
from .optim import Adam, weight_clip
from .ppm import save_image_grid
from .rng import PortableRng
from .spectrum import power_spectrum_1d, spectrum_distance
from .tensor import Tensor, no_grad

CSV_HEADER = "epoch,loss_d,loss_g,beta_low,beta_high,fid_proxy,spec_high_dist,seconds"
DIVERGENCE_LIMIT = 1e4

# Offsets separating derived RNG stream families (epoch shuffles use the
# dataset seed directly inside ImageDataset).
_EVAL_STREAM = 2_000_000


class TrainState:
    """Everything that evolves during training, plus its config."""

    def __init__(self, cfg: GanConfig, generator: Generator, discriminator: Discriminator,
                 opt_g: Adam, opt_d: Adam, loss: GanLoss, schedule: BetaSchedule,
                 latent_rng: PortableRng):
        self.cfg = cfg
        self.generator = generator
        self.discriminator = discriminator
        self.opt_g = opt_g
        self.opt_d = opt_d
        self.loss = loss
        self.schedule = schedule
        self.latent_rng = latent_rng
        self.epoch = 0          # completed epochs
        self.iteration = 0      # completed training iterations


def init_state(cfg: GanConfig) -> TrainState:
    """Fresh models, optimizers, and RNG streams from a config."""
    g = build_generator(cfg.image_size, cfg.latent_dim, cfg.base_channels, 3,
                        cfg.conv, cfg.alpha, cfg.seed)
    d = build_discriminator(cfg.image_size, cfg.base_channels, 3,
                            cfg.conv, cfg.alpha, cfg.seed)
    opt_g = Adam(g.parameters(), cfg.lr, cfg.beta1, cfg.beta2)
    opt_d = Adam(d.parameters(), cfg.lr, cfg.beta1, cfg.beta2)
    return TrainState(cfg, g, d, opt_g, opt_d, GanLoss(cfg.loss), build_schedule(cfg),
                      PortableRng.derived(cfg.seed, "latents"))


def load_dataset(cfg: GanConfig) -> ImageDataset:
    """The run's dataset: an image directory if set, else the synthetic spec."""
    if cfg.data_dir:
        dataset, _ = load_image_directory(cfg.data_dir, cfg.image_size, cfg.seed)
        return dataset
    return load_synthetic(SyntheticSpec.parse(cfg.synthetic), cfg.image_size)


def _check_finite(loss_d: float, loss_g: float, state: TrainState) -> None:
    for value in (loss_d, loss_g):
        if not np.isfinite(value) or abs(value) > DIVERGENCE_LIMIT:
            raise DivergenceError(state.epoch + 1, state.iteration, loss_d, loss_g)


def train_epoch(state: TrainState, dataset: ImageDataset) -> tuple[float, float, float, float]:
    """One pass over the dataset; returns (mean loss_D, mean loss_G, beta_low, beta_high).

    Each iteration takes one discriminator step on a real batch plus a
    detached fake batch, then one generator step reusing the same fake
    batch against the updated discriminator (1:1 update ratio).
    """
    cfg = state.cfg
    beta_low, beta_high = state.schedule.at_epoch(state.epoch, cfg.epochs)
    if cfg.conv == "soft_octave":
        set_soft_betas(state.generator, beta_low, beta_high)
        set_soft_betas(state.discriminator, beta_low, beta_high)

    state.generator.train()
    state.discriminator.train()
    sum_d = 0.0
    sum_g = 0.0
    n_batches = 0
    for batch in dataset.epoch_batches(state.epoch, cfg.batch_size):
        x_real = Tensor(batch)
        z = sample_latents(state.latent_rng, batch.shape[0], cfg.latent_dim)

        fake = state.generator(z)
        loss_d = state.loss.d_loss(state.discriminator(x_real),
                                   state.discriminator(fake.detach()))
        state.discriminator.zero_grad()
        loss_d.backward()
        state.opt_d.step()
        if state.loss.needs_clip:
            weight_clip(state.discriminator, cfg.clip)

        loss_g = state.loss.g_loss(state.discriminator(fake))
        state.generator.zero_grad()
        state.discriminator.zero_grad()
        loss_g.backward()
        state.opt_g.step()

        ld, lg = loss_d.item(), loss_g.item()
        _check_finite(ld, lg, state)
        sum_d += ld
        sum_g += lg
        n_batches += 1
        state.iteration += 1

    state.epoch += 1
    return sum_d / n_batches, sum_g / n_batches, beta_low, beta_high


def generate_images(state: TrainState, n: int, stream) -> np.ndarray:
    """Sample n images from the generator in eval mode; (n, 3, S, S) float32."""
    rng = PortableRng.derived(state.cfg.seed, stream)
    state.generator.eval()
    out = []
    with no_grad():
        for start in range(0, n, 64):
            k = min(64, n - start)
            z = sample_latents(rng, k, state.cfg.latent_dim)
            out.append(state.generator(z).data)
    state.generator.train()
    return np.concatenate(out, axis=0)


class _Evaluator:
    """Per-run cache of real-data statistics for the epoch metrics."""

    def __init__(self, dataset: ImageDataset):
        self.extractor = FeatureExtractor()
        self.real_stats = fit_stats(extract_features(dataset.images, self.extractor))
        self.real_profile = power_spectrum_1d(dataset.images)

    def __call__(self, state: TrainState) -> tuple[float, float]:
        fakes = generate_images(state, state.cfg.eval_samples,
                                _EVAL_STREAM + state.epoch)
        fake_stats = fit_stats(extract_features(fakes, self.extractor))
        fid_proxy = fid(fake_stats, self.real_stats)
        dist = spectrum_distance(power_spectrum_1d(fakes), self.real_profile, "high")
        return fid_proxy, dist


def _format_row(epoch: int, loss_d: float, loss_g: float, beta_low: float,
                beta_high: float, fid_proxy: float, spec_high_dist: float,
                seconds: float) -> str:
    vals = [loss_d, loss_g, beta_low, beta_high, fid_proxy, spec_high_dist, seconds]
    return ",".join([str(epoch)] + [repr(float(v)) for v in vals])


def run_training(cfg: GanConfig, clock=time.perf_counter):
    """Full training run (or resume); returns (state, csv_path).

    Writes into ``cfg.out_dir``: ``run.csv`` (one row per completed epoch),
    ``samples/epoch_NNN.ppm`` 8x8 grids from fixed latents,
    ``checkpoint_last.sogc`` refreshed every epoch, and
    ``checkpoint_final.sogc`` at the end.  With ``cfg.resume`` set, training
    continues from that checkpoint (its config snapshot governs the model
    and data; the caller's out_dir, epochs, and clock mode apply) and the
    CSV gains only the newly run epochs.
    """
    from .checkpoint import load_checkpoint, save_checkpoint

    if cfg.resume:
        state = load_checkpoint(cfg.resume)
        state.cfg = state.cfg.copy(out_dir=cfg.out_dir, epochs=cfg.epochs,
                                   resume=cfg.resume, fixed_clock=cfg.fixed_clock)
        cfg = state.cfg
    else:
        state = init_state(cfg)

    dataset = load_dataset(cfg)
    evaluator = _Evaluator(dataset)

    out_dir = cfg.out_dir
    samples_dir = os.path.join(out_dir, "samples")
    os.makedirs(samples_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "run.csv")
    new_csv = not (os.path.exists(csv_path) and os.path.getsize(csv_path) > 0)

    with open(csv_path, "a", encoding="utf-8") as csv:
        if new_csv:
            csv.write(CSV_HEADER + "\n")
            csv.flush()
        while state.epoch < cfg.epochs:
            t0 = clock()
            loss_d, loss_g, beta_low, beta_high = train_epoch(state, dataset)
            fid_proxy, spec_dist = evaluator(state)
            seconds = 0.0 if cfg.fixed_clock else clock() - t0

            grid = generate_images(state, 64, "grid")
            save_image_grid(os.path.join(samples_dir, f"epoch_{state.epoch:03d}.ppm"),
                            grid, cols=8)
            save_checkpoint(state, os.path.join(out_dir, "checkpoint_last.sogc"))

            csv.write(_format_row(state.epoch, loss_d, loss_g, beta_low, beta_high,
                                  fid_proxy, spec_dist, seconds) + "\n")
            csv.flush()

    save_checkpoint(state, os.path.join(out_dir, "checkpoint_final.sogc"))
    return state, csv_path
