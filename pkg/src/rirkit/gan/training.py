"""Wasserstein GAN training: RMSProp updates, critic weight clipping, and an
alternating loop of n_critic critic steps per generator step.

The critic minimizes mean(fake_scores) - mean(real_scores); the generator
minimizes -mean(fake_scores). The per-step Wasserstein estimate
mean(real_scores) - mean(fake_scores) is logged so progress can be audited.
Given a seed (and thread count), training is bit-reproducible.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..audio import Rir
from .checkpoint import save_checkpoint
from .nets import Critic, GanModel, Generator, sample_latent


class TrainingDivergedError(RuntimeError):
    """Raised when a loss goes non-finite; carries the step for diagnosis."""

    def __init__(self, step: int, what: str, value: float):
        super().__init__(f"non-finite {what} ({value}) at generator step {step}")
        self.step = step
        self.what = what
        self.value = value


@dataclass
class TrainConfig:
    steps: int
    batch_size: int = 16
    learning_rate: float = 5e-5
    clip_c: float = 0.01
    n_critic: int = 5
    rng_seed: int = 0
    d: int = 4
    shuffle_radius: int = 2
    latent_dist: str = "uniform"
    checkpoint_every: int = 100

    def __post_init__(self):
        if self.steps < 1 or self.batch_size < 1 or self.n_critic < 1 or self.d < 1:
            raise ValueError("steps, batch_size, n_critic and d must all be >= 1")
        if self.clip_c <= 0:
            raise ValueError("clip_c must be > 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")


@dataclass
class LogRow:
    step: int
    critic_loss: float
    generator_loss: float
    wasserstein_estimate: float


@dataclass
class TrainResult:
    model: GanModel
    log: list[LogRow] = field(default_factory=list)
    critic_updates: int = 0

    def wasserstein_series(self) -> np.ndarray:
        return np.array([r.wasserstein_estimate for r in self.log])


def critic_loss(real_scores: np.ndarray, fake_scores: np.ndarray) -> float:
    """mean(fake) - mean(real); the critic drives this down, widening the gap."""
    real = np.asarray(real_scores, dtype=np.float64)
    fake = np.asarray(fake_scores, dtype=np.float64)
    if real.size == 0 or fake.size == 0:
        raise ValueError("score batches must be non-empty")
    return float(fake.mean() - real.mean())


def generator_loss(fake_scores: np.ndarray) -> float:
    fake = np.asarray(fake_scores, dtype=np.float64)
    if fake.size == 0:
        raise ValueError("score batch must be non-empty")
    return float(-fake.mean())


def clip_weights(net: Critic, c: float) -> None:
    """Clamp every critic parameter into [-c, c] in place."""
    if c <= 0:
        raise ValueError("clip bound must be > 0")
    for arr in net.param_arrays():
        np.clip(arr, -c, c, out=arr)


class RMSProp:
    """Per-parameter squared-gradient running average (decay 0.9, eps 1e-8)."""

    def __init__(self, params: list[np.ndarray], lr: float,
                 decay: float = 0.9, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.decay = decay
        self.eps = eps
        self.cache = [np.zeros_like(p, dtype=np.float64) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        for p, g, v in zip(self.params, grads, self.cache):
            g64 = g.astype(np.float64)
            v *= self.decay
            v += (1.0 - self.decay) * g64 * g64
            p -= (self.lr * g64 / (np.sqrt(v) + self.eps)).astype(p.dtype)


def _as_matrix(dataset: Sequence[Rir] | np.ndarray, dtype) -> np.ndarray:
    if isinstance(dataset, np.ndarray):
        data = dataset
    else:
        data = np.stack([r.samples for r in dataset])
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("dataset must be a non-empty collection of RIR vectors")
    return data.astype(dtype)


def write_log_csv(log: Sequence[LogRow], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "critic_loss", "generator_loss", "wasserstein_estimate"])
        for row in log:
            writer.writerow(
                [row.step, f"{row.critic_loss:.8g}", f"{row.generator_loss:.8g}",
                 f"{row.wasserstein_estimate:.8g}"]
            )


def train(dataset: Sequence[Rir] | np.ndarray, config: TrainConfig,
          out_dir: str | Path | None = None, dtype=np.float32) -> TrainResult:
    """Run the alternating WGAN loop and return the trained model plus log.

    With out_dir set, checkpoints land there every checkpoint_every generator
    steps (plus a final one) along with training_log.csv.
    """
    data = _as_matrix(dataset, dtype)
    n_data = data.shape[0]
    b = config.batch_size
    rng = np.random.default_rng(config.rng_seed)

    gen = Generator(config.d, rng=rng, dtype=dtype)
    critic = Critic(config.d, shuffle_radius=config.shuffle_radius, rng=rng, dtype=dtype)
    g_opt = RMSProp(gen.param_arrays(), config.learning_rate)
    c_opt = RMSProp(critic.param_arrays(), config.learning_rate)

    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    result = TrainResult(model=GanModel(gen, critic, config.d, 0, config.rng_seed,
                                        config.latent_dist))
    # gradient of the critic loss wrt scores of the combined [real | fake] batch
    gs_critic = np.concatenate([np.full(b, -1.0 / b), np.full(b, 1.0 / b)]).astype(dtype)
    gs_gen = np.full(b, -1.0 / b, dtype=dtype)

    for step in range(1, config.steps + 1):
        c_loss = w_est = 0.0
        for _ in range(config.n_critic):
            idx = rng.integers(0, n_data, size=b)
            real = data[idx]
            z = sample_latent(rng, b, config.latent_dist)
            fake = gen.forward(z)
            scores = critic.forward(np.concatenate([real, fake]), rng=rng)
            c_loss = critic_loss(scores[:b], scores[b:])
            if not np.isfinite(c_loss):
                raise TrainingDivergedError(step, "critic loss", c_loss)
            w_est = -c_loss
            critic.backward(gs_critic)
            c_opt.step(critic.grad_arrays())
            clip_weights(critic, config.clip_c)
            result.critic_updates += 1

        z = sample_latent(rng, b, config.latent_dist)
        fake = gen.forward(z)
        scores = critic.forward(fake, rng=rng)
        g_loss = generator_loss(scores)
        if not np.isfinite(g_loss):
            raise TrainingDivergedError(step, "generator loss", g_loss)
        gx = critic.backward(gs_gen, param_grads=False)
        gen.backward(gx)
        g_opt.step(gen.grad_arrays())

        result.log.append(LogRow(step, c_loss, g_loss, w_est))
        result.model.step = step
        if (out_path is not None and config.checkpoint_every > 0
                and step % config.checkpoint_every == 0):
            save_checkpoint(result.model, out_path / f"checkpoint_{step:06d}.gan")

    if out_path is not None:
        save_checkpoint(result.model, out_path / "checkpoint_final.gan")
        write_log_csv(result.log, out_path / "training_log.csv")
    return result
