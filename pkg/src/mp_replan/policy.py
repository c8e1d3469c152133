"""Gaussian weight-space policy and state-value function approximators."""

from __future__ import annotations

import numpy as np

from .gaussian import LOG_STD_MAX, LOG_STD_MIN, DiagGaussian
from .nets import Mlp, MlpSpec


class GaussianPolicy:
    """MLP mean with a state-independent learned log std per output dimension.

    The log std parameter is clamped on read to keep densities well defined.
    An optional fixed residual map adds a linear function of the observation
    to the mean (a skip connection); with it, a zero network output can encode
    "hold the current posture", which makes goal corrections local deltas.
    """

    def __init__(self, spec: MlpSpec, rng: np.random.Generator,
                 log_std_init: float = 0.0, final_scale: float = 0.01,
                 residual_map: np.ndarray | None = None):
        self.mean_net = Mlp(spec, rng, final_scale=final_scale)
        self.log_std = np.full(spec.output_dim, float(log_std_init))
        if residual_map is not None:
            residual_map = np.asarray(residual_map, dtype=float)
            if residual_map.shape != (spec.output_dim, spec.input_dim):
                raise ValueError("residual_map must be (output_dim, input_dim)")
        self.residual_map = residual_map

    @property
    def output_dim(self) -> int:
        return self.mean_net.spec.output_dim

    @property
    def input_dim(self) -> int:
        return self.mean_net.spec.input_dim

    def clamped_log_std(self) -> np.ndarray:
        return np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX)

    def _shift(self, obs):
        if self.residual_map is None:
            return 0.0
        return np.asarray(obs, dtype=float) @ self.residual_map.T

    def dist(self, obs) -> DiagGaussian:
        mean = self.mean_net.forward(obs) + self._shift(obs)
        return DiagGaussian(mean, self.clamped_log_std())

    def dist_cached(self, obs):
        mean, cache = self.mean_net.forward_cached(obs)
        return DiagGaussian(mean + self._shift(obs), self.clamped_log_std()), cache

    def backward(self, cache, grad_mean, grad_log_std_total) -> np.ndarray:
        """Flat parameter gradient from upstream mean / log_std gradients.

        grad_log_std_total is the already-summed gradient for the shared
        log_std vector; clamped entries receive zero gradient.
        """
        net_grads, _ = self.mean_net.backward(cache, grad_mean)
        inside = (self.log_std > LOG_STD_MIN) & (self.log_std < LOG_STD_MAX)
        g_log_std = np.where(inside, grad_log_std_total, 0.0)
        return np.concatenate([Mlp.flatten_grads(net_grads), g_log_std])

    @property
    def num_params(self) -> int:
        return self.mean_net.num_params + self.log_std.size

    def get_flat(self) -> np.ndarray:
        return np.concatenate([self.mean_net.get_flat(), self.log_std])

    def set_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.num_params:
            raise ValueError(f"expected {self.num_params} parameters, got {flat.size}")
        self.mean_net.set_flat(flat[: self.mean_net.num_params])
        self.log_std = flat[self.mean_net.num_params:].copy()


class ValueFunction:
    """Scalar state-value network."""

    def __init__(self, spec: MlpSpec, rng: np.random.Generator):
        if spec.output_dim != 1:
            raise ValueError("value function must have a single output")
        self.net = Mlp(spec, rng)

    def values(self, obs) -> np.ndarray:
        out = self.net.forward(np.atleast_2d(np.asarray(obs, dtype=float)))
        return out[:, 0]

    def values_cached(self, obs):
        out, cache = self.net.forward_cached(np.atleast_2d(np.asarray(obs, dtype=float)))
        return out[:, 0], cache

    def backward(self, cache, grad_values) -> np.ndarray:
        grads, _ = self.net.backward(cache, np.asarray(grad_values, float)[:, None])
        return Mlp.flatten_grads(grads)

    @property
    def num_params(self) -> int:
        return self.net.num_params

    def get_flat(self) -> np.ndarray:
        return self.net.get_flat()

    def set_flat(self, flat) -> None:
        self.net.set_flat(flat)
