"""Linear basis-function primitive: fast, but discontinuous under replanning.

Positions are a plain weighted sum of normalized phase RBFs, so a
mid-execution weight change generally jumps; this representation is kept as
the negative control next to the closed-form generator.
"""

from __future__ import annotations

import numpy as np

from .basis import rbf_centers
from .phase import PhaseConfig, phase
from .trajectory import DesiredTrajectory, weight_matrix


def promp_basis(times, num_basis: int, phase_cfg: PhaseConfig):
    """Normalized RBF features over the phase and their analytic time derivatives."""
    if num_basis < 1:
        raise ValueError(f"num_basis must be positive, got {num_basis}")
    t = np.atleast_1d(np.asarray(times, dtype=float))
    x = np.atleast_1d(phase(t, phase_cfg))
    centers, bandwidth = rbf_centers(num_basis, phase_cfg)
    diff = x[:, None] - centers
    raw = np.exp(-(diff**2) / (2.0 * bandwidth))
    draw = -(diff / bandwidth) * raw
    total = raw.sum(axis=1, keepdims=True)
    dtotal = draw.sum(axis=1, keepdims=True)
    features = raw / total
    dfeatures_dx = (draw * total - raw * dtotal) / total**2
    dx_dt = -(phase_cfg.alpha_x / phase_cfg.tau) * x
    return features, dfeatures_dx * dx_dt[:, None]


def promp_evaluate(weights, times, phase_cfg: PhaseConfig) -> DesiredTrajectory:
    """Evaluate the linear model; velocity comes from the basis derivative."""
    w = weight_matrix(weights)
    features, dfeatures = promp_basis(times, w.shape[1], phase_cfg)
    t = np.atleast_1d(np.asarray(times, dtype=float))
    return DesiredTrajectory(times=t, pos=features @ w.T, vel=dfeatures @ w.T)


def fit_promp_weights(traj: DesiredTrajectory, num_basis: int,
                      phase_cfg: PhaseConfig) -> np.ndarray:
    """Least-squares weights reproducing a position trajectory."""
    features, _ = promp_basis(traj.times, num_basis, phase_cfg)
    solution, *_ = np.linalg.lstsq(features, traj.pos, rcond=None)
    return solution.T
