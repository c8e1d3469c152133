"""Small fully connected networks with hand-written forward and backward passes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ACTIVATIONS = ("tanh", "relu")


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden: tuple
    output_dim: int
    activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        dims = (self.input_dim, *self.hidden, self.output_dim)
        if any(int(d) != d or d < 1 for d in dims):
            raise ValueError(f"all layer dimensions must be positive integers, got {dims}")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}")

    @property
    def layer_dims(self) -> tuple:
        return (self.input_dim, *self.hidden, self.output_dim)


def _orthogonal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return q[:rows, :cols] if rows >= cols else q[:cols, :rows].T


class Mlp:
    """Affine-plus-activation stack; backward returns exact reverse-mode gradients.

    Hidden weights start orthogonal, which matches the output variance of the
    classic 1/sqrt(fan_in) Gaussian initialization while keeping layer norms
    stable; an optional final_scale shrinks the last layer (used for policy
    heads).  Biases start at zero.
    """

    def __init__(self, spec: MlpSpec, rng: np.random.Generator,
                 final_scale: float | None = None):
        self.spec = spec
        dims = spec.layer_dims
        self.weights = []
        self.biases = []
        for i in range(len(dims) - 1):
            fan_in, fan_out = dims[i], dims[i + 1]
            scale = 1.0
            if final_scale is not None and i == len(dims) - 2:
                scale = final_scale
            self.weights.append(_orthogonal(rng, fan_out, fan_in) * scale)
            self.biases.append(np.zeros(fan_out))

    def _act(self, z):
        return np.tanh(z) if self.spec.activation == "tanh" else np.maximum(z, 0.0)

    def _act_grad(self, z, a):
        if self.spec.activation == "tanh":
            return 1.0 - a * a
        return (z > 0).astype(float)

    def forward(self, x: np.ndarray) -> np.ndarray:
        out, _ = self.forward_cached(x)
        return out

    def forward_cached(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        h = x[None, :] if squeeze else x
        if h.shape[1] != self.spec.input_dim:
            raise ValueError(f"expected input dim {self.spec.input_dim}, got {h.shape[1]}")
        inputs = [h]
        pre = []
        n_layers = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w.T + b
            pre.append(z)
            h = self._act(z) if i < n_layers - 1 else z
            inputs.append(h)
        out = inputs[-1]
        return (out[0] if squeeze else out), (inputs, pre, squeeze)

    def backward(self, cache, grad_out: np.ndarray):
        """Parameter gradients plus the gradient w.r.t. the network input."""
        inputs, pre, squeeze = cache
        g = np.asarray(grad_out, dtype=float)
        if squeeze and g.ndim == 1:
            g = g[None, :]
        if g.ndim != 2 or g.shape[1] != self.spec.output_dim or g.shape[0] != inputs[0].shape[0]:
            raise ValueError("upstream gradient shape does not match the forward pass")
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.weights)
        for i in range(len(self.weights) - 1, -1, -1):
            if i < len(self.weights) - 1:
                g = g * self._act_grad(pre[i], inputs[i + 1])
            grads_w[i] = g.T @ inputs[i]
            grads_b[i] = g.sum(axis=0)
            g = g @ self.weights[i]
        grad_input = g[0] if squeeze else g
        return list(zip(grads_w, grads_b)), grad_input

    @property
    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def get_flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.reshape(-1))
            parts.append(b)
        return np.concatenate(parts)

    def set_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.num_params:
            raise ValueError(f"expected {self.num_params} parameters, got {flat.size}")
        offset = 0
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[i] = flat[offset:offset + w.size].reshape(w.shape).copy()
            offset += w.size
            self.biases[i] = flat[offset:offset + b.size].copy()
            offset += b.size

    @staticmethod
    def flatten_grads(param_grads) -> np.ndarray:
        parts = []
        for gw, gb in param_grads:
            parts.append(gw.reshape(-1))
            parts.append(gb)
        return np.concatenate(parts)
