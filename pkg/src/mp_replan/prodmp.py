"""Closed-form trajectory generation from precomputed basis tables.

Position and velocity are linear in the weights once the initial-value
coefficients are known:

    y(t)  = c1 y1(t)  + c2 y2(t)  + pos_row(t) . w
    y'(t) = c1 dy1(t) + c2 dy2(t) + vel_row(t) . w

c1 and c2 absorb the state at the (re)planning instant, which is what makes
mid-execution weight changes smooth in both position and velocity.
"""

from __future__ import annotations

import numpy as np

from .basis import MpBasisSet, basis_rows, complementary
from .trajectory import DesiredTrajectory, InitialCondition, weight_matrix


def solve_coeffs(ic: InitialCondition, weights, basis: MpBasisSet):
    """Initial-value coefficients (c1, c2) per DoF.

    Substituting them back reproduces (y_b, dy_b) at t_b to arithmetic
    precision.  The Wronskian denominator is positive for any valid
    configuration but is guarded against numerical underflow.
    """
    w = weight_matrix(weights)
    if w.shape[1] != basis.cfg.num_basis + 1:
        raise ValueError(
            f"weights have {w.shape[1]} columns, basis expects {basis.cfg.num_basis + 1}"
        )
    y1b, y2b, dy1b, dy2b = complementary(ic.t_b, basis.cfg)
    wronskian = float(y1b * dy2b - y2b * dy1b)
    if abs(wronskian) < 1e-290:
        raise ArithmeticError(
            f"degenerate Wronskian {wronskian!r} at t_b={ic.t_b}; grid too long for alpha/tau"
        )
    pos_row, vel_row = basis_rows(basis, ic.t_b)
    phi = w @ pos_row[0]
    dphi = w @ vel_row[0]
    c1 = (dy2b * ic.y_b - y2b * ic.dy_b) / wronskian + (y2b * dphi - dy2b * phi) / wronskian
    c2 = (y1b * ic.dy_b - dy1b * ic.y_b) / wronskian + (dy1b * phi - y1b * dphi) / wronskian
    return c1, c2


def evaluate(ic: InitialCondition, weights, basis: MpBasisSet, times) -> DesiredTrajectory:
    """Closed-form positions and velocities at the given times."""
    w = weight_matrix(weights)
    if w.shape[0] != ic.num_dof:
        raise ValueError(f"{w.shape[0]} weight rows for {ic.num_dof} DoFs")
    c1, c2 = solve_coeffs(ic, w, basis)
    t = np.atleast_1d(np.asarray(times, dtype=float))
    y1, y2, dy1, dy2 = complementary(t, basis.cfg)
    pos_rows, vel_rows = basis_rows(basis, t)
    pos = np.outer(y1, c1) + np.outer(y2, c2) + pos_rows @ w.T
    vel = np.outer(dy1, c1) + np.outer(dy2, c2) + vel_rows @ w.T
    return DesiredTrajectory(times=t, pos=pos, vel=vel)


def rollout(ic: InitialCondition, weights, basis: MpBasisSet,
            horizon_steps: int, step: float | None = None) -> DesiredTrajectory:
    """Trajectory from t_b over horizon_steps steps, starting at (y_b, dy_b).

    The step defaults to the basis grid spacing; t_b + horizon must stay
    within the precomputed grid.
    """
    if horizon_steps < 1:
        raise ValueError(f"horizon_steps must be positive, got {horizon_steps}")
    if step is None:
        step = basis.grid_step
    times = ic.t_b + step * np.arange(horizon_steps + 1)
    return evaluate(ic, weights, basis, times)
