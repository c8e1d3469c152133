"""Numerically integrated spring-damper primitive, used as the reference oracle.

The closed-form generator must agree with this integrator; the integrator is
deliberately higher-order (classic RK4) than the tolerance it checks.
"""

from __future__ import annotations

import numpy as np

from .basis import DmpConfig, rbf_basis
from .phase import phase
from .trajectory import DesiredTrajectory, InitialCondition, weight_matrix


def integrate(ic: InitialCondition, weights, cfg: DmpConfig,
              dt: float, steps: int) -> DesiredTrajectory:
    """RK4 integration of tau^2 y'' = alpha (beta (g - y) - tau y') + x phi(x).w."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    w = weight_matrix(weights)
    if w.shape[0] != ic.num_dof:
        raise ValueError(f"{w.shape[0]} weight rows for {ic.num_dof} DoFs")
    if w.shape[1] != cfg.num_basis + 1:
        raise ValueError(
            f"weights have {w.shape[1]} columns, config expects {cfg.num_basis + 1}"
        )
    shape_w = w[:, :-1]
    goal = w[:, -1]
    alpha, beta, tau = cfg.alpha, cfg.beta, cfg.tau

    def accel(t, y, v):
        x = phase(t, cfg.phase)
        if cfg.num_basis > 0:
            f = x * (rbf_basis(x, cfg) @ shape_w.T)
        else:
            f = 0.0
        return (alpha * (beta * (goal - y) - tau * v) + f) / tau**2

    n = ic.num_dof
    pos = np.empty((steps + 1, n))
    vel = np.empty((steps + 1, n))
    pos[0], vel[0] = ic.y_b, ic.dy_b
    y, v = ic.y_b.copy(), ic.dy_b.copy()
    for i in range(steps):
        t = ic.t_b + i * dt
        k1v = accel(t, y, v)
        k1y = v
        k2v = accel(t + 0.5 * dt, y + 0.5 * dt * k1y, v + 0.5 * dt * k1v)
        k2y = v + 0.5 * dt * k1v
        k3v = accel(t + 0.5 * dt, y + 0.5 * dt * k2y, v + 0.5 * dt * k2v)
        k3y = v + 0.5 * dt * k2v
        k4v = accel(t + dt, y + dt * k3y, v + dt * k3v)
        k4y = v + dt * k3v
        y = y + (dt / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        v = v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        pos[i + 1], vel[i + 1] = y, v
    times = ic.t_b + dt * np.arange(steps + 1)
    return DesiredTrajectory(times=times, pos=pos, vel=vel)
