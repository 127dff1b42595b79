"""Per-sample clipping and noisy mini-batch mean.

The privatized gradient of one local step is the mean of clipped
per-sample gradients plus Gaussian noise with per-coordinate standard
deviation ``sigma * C / batch_size``. Noise draws are keyed by
(run seed, round, client, step) so trajectories are reproducible and
clients can run concurrently on disjoint streams.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .blocks import ConfigurationError

# Domain tags keeping keyed RNG streams disjoint across uses of one seed.
DOMAIN_NOISE = 0
DOMAIN_BATCH = 1
DOMAIN_CLIENTS = 2
DOMAIN_INIT = 3
DOMAIN_DATA = 4


@dataclass(frozen=True)
class DPConfig:
    """Clipping and noise parameters of the per-step DP mechanism."""

    clip_norm: float
    noise_multiplier: float
    sample_rate: float = 1.0
    client_dataset_size: int = 1

    def __post_init__(self):
        if not (self.clip_norm > 0 and math.isfinite(self.clip_norm)):
            raise ConfigurationError("clip_norm must be finite and > 0")
        if not (self.noise_multiplier >= 0 and math.isfinite(self.noise_multiplier)):
            raise ConfigurationError("noise_multiplier must be finite and >= 0")
        if not (0 < self.sample_rate <= 1):
            raise ConfigurationError("sample_rate must be in (0, 1]")
        if self.batch_size < 1:
            raise ConfigurationError("floor(sample_rate * dataset_size) must be >= 1")

    @property
    def batch_size(self) -> int:
        return int(self.sample_rate * self.client_dataset_size)

    @property
    def noise_std(self) -> float:
        """Per-coordinate std of the noise on the batch mean: sigma*C/(sR)."""
        return self.noise_multiplier * self.clip_norm / self.batch_size


class NoiseStream:
    """Deterministic Gaussian draws keyed by integer tuples.

    Identical (seed, key) pairs reproduce the same vector; distinct keys
    yield independent streams.
    """

    def __init__(self, run_seed: int):
        self.run_seed = int(run_seed)

    def rng(self, key: tuple[int, ...]) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence([self.run_seed, *(int(k) for k in key)]))

    def normal(self, key: tuple[int, ...], size: int) -> np.ndarray:
        return self.rng(key).standard_normal(size)


def clip(g: np.ndarray, clip_norm: float) -> np.ndarray:
    """Rescale g to L2 norm at most clip_norm; no-op below the threshold.

    The rescale loop guarantees the recomputed norm of the output is
    <= clip_norm, which makes the operation exactly idempotent.
    """
    if clip_norm <= 0:
        raise ConfigurationError("clip_norm must be > 0")
    g = np.asarray(g, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise ConfigurationError("gradient contains non-finite entries")
    norm = np.linalg.norm(g)
    if norm <= clip_norm:
        return g.copy()
    out = g * (clip_norm / norm)
    n = np.linalg.norm(out)
    while n > clip_norm:  # guard against round-up past the threshold
        out = out * (clip_norm / n)
        n = np.linalg.norm(out)
    return out


def clip_batch(grads: np.ndarray, clip_norm: float) -> np.ndarray:
    """Row-wise clip of an (n, d) gradient matrix."""
    return np.stack([clip(row, clip_norm) for row in np.asarray(grads, dtype=np.float64)])


def noisy_batch_mean(clipped: np.ndarray, cfg: DPConfig,
                     noise: NoiseStream | None,
                     key: tuple[int, ...] = ()) -> np.ndarray:
    """Mean of clipped gradients plus keyed Gaussian noise.

    Summation runs over per-coordinate sorted values, so the result is
    exactly invariant under permutation of the batch.
    """
    clipped = np.asarray(clipped, dtype=np.float64)
    if clipped.ndim != 2 or clipped.shape[0] == 0:
        raise ConfigurationError("expected non-empty (n, d) batch of gradients")
    if clipped.shape[0] != cfg.batch_size:
        raise ConfigurationError(
            f"batch size {clipped.shape[0]} != floor(s*R) = {cfg.batch_size}")
    norms = np.linalg.norm(clipped, axis=1)
    if np.any(norms > cfg.clip_norm + 1e-9):
        raise ConfigurationError("noisy_batch_mean received unclipped gradients")
    mean = np.sum(np.sort(clipped, axis=0), axis=0) / cfg.batch_size
    if cfg.noise_multiplier > 0:
        if noise is None:
            raise ConfigurationError("noise stream required when sigma > 0")
        mean = mean + cfg.noise_std * noise.normal((DOMAIN_NOISE, *key),
                                                   clipped.shape[1])
    return mean
