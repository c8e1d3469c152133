"""PD tracking controller converting desired trajectories into raw actions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PdGains:
    """Nonnegative proportional and derivative gains per DoF."""

    kp: np.ndarray
    kd: np.ndarray

    def __post_init__(self):
        kp = np.atleast_1d(np.asarray(self.kp, dtype=float))
        kd = np.atleast_1d(np.asarray(self.kd, dtype=float))
        if kp.shape != kd.shape:
            raise ValueError("kp and kd must have matching shapes")
        if np.any(kp < 0) or np.any(kd < 0) or not np.all(np.isfinite(kp + kd)):
            raise ValueError("gains must be finite and nonnegative")
        kp.setflags(write=False)
        kd.setflags(write=False)
        object.__setattr__(self, "kp", kp)
        object.__setattr__(self, "kd", kd)

    @classmethod
    def uniform(cls, kp: float, kd: float, num_dof: int) -> "PdGains":
        return cls(np.full(num_dof, kp), np.full(num_dof, kd))


def pd_action(q_desired, q_measured, gains: PdGains, bound: float | None = None):
    """a = kp (y_d - y) + kd (y'_d - y'), clamped to the action bounds.

    Linear in the tracking error before clamping.
    """
    pos_d, vel_d = (np.asarray(v, dtype=float) for v in q_desired)
    pos, vel = (np.asarray(v, dtype=float) for v in q_measured)
    if not (pos_d.shape == vel_d.shape == pos.shape == vel.shape == gains.kp.shape):
        raise ValueError("desired state, measured state and gains must share one shape")
    action = gains.kp * (pos_d - pos) + gains.kd * (vel_d - vel)
    if bound is not None:
        action = np.clip(action, -bound, bound)
    return action
