"""Exponentially decaying phase variable shared by all movement primitives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PhaseConfig:
    """Phase decay rate and trajectory duration (time-scale factor, seconds)."""

    alpha_x: float = 3.0
    tau: float = 1.0

    def __post_init__(self):
        if not (self.alpha_x > 0 and np.isfinite(self.alpha_x)):
            raise ValueError(f"alpha_x must be positive, got {self.alpha_x}")
        if not (self.tau > 0 and np.isfinite(self.tau)):
            raise ValueError(f"tau must be positive, got {self.tau}")


def phase(t, cfg: PhaseConfig):
    """Phase x(t) = exp(-alpha_x / tau * t).

    Starts at exactly 1.0 and decays strictly monotonically; time-scaled
    instances agree at equal t / tau.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("phase is only defined for t >= 0")
    x = np.exp(-cfg.alpha_x / cfg.tau * t_arr)
    return float(x) if np.isscalar(t) or t_arr.ndim == 0 else x
