"""Surrogate policy objectives and value regression, with exact gradients.

Two modes share one code path: the clipped importance-ratio objective, and the
trust-region variant where the ratio is computed through the projection layer
and a regression penalty pulls the raw policy toward its projection.
"""

from __future__ import annotations

import numpy as np

from .gaussian import DiagGaussian
from .policy import GaussianPolicy, ValueFunction
from .projection import (TrustRegionBounds, project_policy,
                         project_policy_backward, trust_region_regression_loss)

MODES = ("ppo_clip", "trpl")


def value_loss(predicted, targets):
    """Mean squared error and its gradient w.r.t. the predictions."""
    predicted = np.asarray(predicted, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predicted.shape != targets.shape:
        raise ValueError("predictions and targets must be aligned")
    residual = predicted - targets
    return float(np.mean(residual**2)), 2.0 * residual / residual.size


def surrogate_loss(policy: GaussianPolicy, obs, actions, advantages, old_log_prob,
                   old_mean, old_log_std, mode: str, *, clip_eps: float = 0.2,
                   bounds: TrustRegionBounds | None = None,
                   trust_region_coeff: float = 25.0,
                   entropy_coeff: float = 0.0):
    """Loss and flat policy gradient on one minibatch.

    Returns (loss, flat gradient, stats dict).  Ratios are built from log
    probabilities; non-finite ratios abort with a diagnostic.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    obs = np.atleast_2d(np.asarray(obs, dtype=float))
    actions = np.atleast_2d(np.asarray(actions, dtype=float))
    advantages = np.asarray(advantages, dtype=float)
    old_log_prob = np.asarray(old_log_prob, dtype=float)
    batch = len(obs)

    mean, cache = policy.mean_net.forward_cached(obs)
    mean = mean + policy._shift(obs)
    log_std = np.broadcast_to(policy.clamped_log_std(), mean.shape)

    proj_cache = None
    if mode == "trpl":
        if bounds is None:
            raise ValueError("trpl mode requires trust region bounds")
        old_dist = DiagGaussian(np.atleast_2d(old_mean), np.asarray(old_log_std, float))
        proj_dist, proj_cache = project_policy(DiagGaussian(mean, log_std),
                                               old_dist, bounds)
        use_mean = np.atleast_2d(proj_dist.mean)
        use_log_std = np.broadcast_to(proj_dist.log_std, use_mean.shape)
    else:
        use_mean, use_log_std = mean, log_std

    std = np.exp(use_log_std)
    z = (actions - use_mean) / std
    log_prob = -0.5 * (z * z).sum(-1) - use_log_std.sum(-1) \
        - 0.5 * actions.shape[1] * np.log(2.0 * np.pi)
    ratio = np.exp(log_prob - old_log_prob)
    if not np.all(np.isfinite(ratio)):
        raise FloatingPointError(
            f"non-finite importance ratios (min logp {log_prob.min()}, "
            f"max logp {log_prob.max()}); aborting update"
        )

    if mode == "ppo_clip":
        unclipped = ratio * advantages
        clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantages
        per_sample = np.minimum(unclipped, clipped)
        loss = -float(np.mean(per_sample))
        use_unclipped = unclipped <= clipped
        dlogp = np.where(use_unclipped, ratio * advantages, 0.0) / -batch
        clip_fraction = float(np.mean(~use_unclipped))
    else:
        loss = -float(np.mean(ratio * advantages))
        dlogp = -(ratio * advantages) / batch
        clip_fraction = 0.0

    grad_mean_used = dlogp[:, None] * (z / std)
    grad_log_std_used = dlogp[:, None] * (z * z - 1.0)

    if mode == "trpl":
        grad_mean, grad_log_std_rows = project_policy_backward(
            proj_cache, grad_mean_used, grad_log_std_used)
        reg_kl, reg_grad_mean, reg_grad_log_std = trust_region_regression_loss(
            DiagGaussian(use_mean, use_log_std), DiagGaussian(mean, log_std))
        loss += trust_region_coeff * float(np.mean(reg_kl))
        grad_mean = grad_mean + (trust_region_coeff / batch) * reg_grad_mean
        grad_log_std_rows = grad_log_std_rows + (trust_region_coeff / batch) * reg_grad_log_std
    else:
        grad_mean, grad_log_std_rows = grad_mean_used, grad_log_std_used

    grad_log_std_total = grad_log_std_rows.sum(axis=0)
    entropy = float(log_std[0].sum() + 0.5 * actions.shape[1] * (1.0 + np.log(2.0 * np.pi)))
    if entropy_coeff != 0.0:
        loss -= entropy_coeff * entropy
        grad_log_std_total = grad_log_std_total - entropy_coeff

    flat_grad = policy.backward(cache, grad_mean, grad_log_std_total)
    stats = {"ratio_mean": float(np.mean(ratio)), "clip_fraction": clip_fraction,
             "entropy": entropy}
    return loss, flat_grad, stats


def value_update_grads(value_fn: ValueFunction, obs, targets):
    """Value regression loss and flat gradient on one minibatch."""
    predicted, cache = value_fn.values_cached(obs)
    loss, grad_pred = value_loss(predicted, np.asarray(targets, dtype=float))
    return loss, value_fn.backward(cache, grad_pred)
