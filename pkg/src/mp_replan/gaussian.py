"""Diagonal Gaussian distributions over movement-parameter vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class DiagGaussian:
    """Mean vector(s) and per-dimension log standard deviations.

    mean may be (K,) or a batch (B, K); log_std broadcasts against it.
    """

    mean: np.ndarray
    log_std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        log_std = np.asarray(self.log_std, dtype=float)
        np.broadcast_shapes(mean.shape, log_std.shape)
        if not np.all(np.isfinite(log_std)):
            raise ValueError("log_std must be finite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "log_std", log_std)

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)

    @property
    def dim(self) -> int:
        return self.mean.shape[-1]

    def log_prob(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        shape = np.broadcast_shapes(x.shape, self.mean.shape, self.log_std.shape)
        z = np.broadcast_to((x - self.mean) / self.std, shape)
        log_std = np.broadcast_to(self.log_std, shape)
        return -0.5 * (z * z + _LOG_2PI).sum(axis=-1) - log_std.sum(axis=-1)

    def sample(self, rng: np.random.Generator, shape=None) -> np.ndarray:
        target = np.broadcast_shapes(self.mean.shape, self.log_std.shape)
        if shape is not None:
            target = tuple(shape) + target
        return self.mean + self.std * rng.standard_normal(target)

    def entropy(self) -> float:
        """Entropy per distribution; scalar for a single shared log_std row."""
        log_std = np.broadcast_to(self.log_std, self.mean.shape)
        return float(np.mean(log_std.sum(axis=-1)) + 0.5 * self.dim * (1.0 + _LOG_2PI))


def kl_parts(p: DiagGaussian, q: DiagGaussian):
    """Decomposed KL(p || q): (mean part, covariance part), each >= 0.

    mean part = sum (mu_p - mu_q)^2 / (2 sigma_q^2)
    cov part  = sum [ log(sigma_q / sigma_p) + sigma_p^2 / (2 sigma_q^2) - 1/2 ]
    """
    if p.dim != q.dim:
        raise ValueError("distributions must have equal dimension")
    var_q = q.std**2
    mean_part = (0.5 * (p.mean - q.mean) ** 2 / var_q).sum(axis=-1)
    shape = np.broadcast_shapes(p.mean.shape, q.mean.shape)
    ratio = np.broadcast_to(np.exp(2.0 * (p.log_std - q.log_std)), shape)
    cov_part = (0.5 * (ratio - np.log(ratio) - 1.0)).sum(axis=-1)
    return mean_part, cov_part


def kl_diag(p: DiagGaussian, q: DiagGaussian):
    """Total KL divergence between diagonal Gaussians."""
    mean_part, cov_part = kl_parts(p, q)
    return mean_part + cov_part
