"""Segment rewards, episode returns and advantage estimation.

A planning segment of horizon k collapses k env steps into one decision.  The
segment reward is the discounted in-segment sum, and discounting gamma**k
between segments makes the two-level bookkeeping compose exactly to the plain
step-level discounted return.
"""

from __future__ import annotations

import numpy as np


def segment_reward(step_rewards, gamma: float) -> float:
    """Discounted sum of the step rewards inside one segment."""
    r = np.asarray(step_rewards, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("a segment needs at least one step reward")
    return float(np.sum(gamma ** np.arange(r.size) * r))


def episode_return(seg_rewards, horizons, gamma: float, starts=None) -> float:
    """Episode return from segment rewards; equals the step-level discounted sum.

    Segments must tile the episode.  When explicit start indices are given
    they are checked for gaps and overlaps.
    """
    rewards = np.asarray(seg_rewards, dtype=float)
    ks = np.asarray(horizons, dtype=int)
    if rewards.shape != ks.shape or rewards.ndim != 1:
        raise ValueError("segment rewards and horizons must be 1-D and aligned")
    if np.any(ks < 1):
        raise ValueError("horizons must be at least 1")
    offsets = np.concatenate([[0], np.cumsum(ks)[:-1]])
    if starts is not None:
        starts = np.asarray(starts, dtype=int)
        if starts.shape != ks.shape or not np.array_equal(starts, offsets):
            raise ValueError("segments overlap or leave gaps in the episode")
    return float(np.sum(gamma ** offsets.astype(float) * rewards))


def gae_advantages(seg_rewards, values, gammas_eff, lam: float):
    """Generalized advantage estimation over one episode's segment process.

    values must hold one more entry than seg_rewards; the final one is the
    bootstrap value (zero for terminal episodes).  gammas_eff is gamma**k per
    segment (scalar or one entry per segment).  Returns (advantages,
    value targets).
    """
    rewards = np.asarray(seg_rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size != rewards.size + 1:
        raise ValueError("values must include one bootstrap entry past the rewards")
    gammas = np.broadcast_to(np.asarray(gammas_eff, dtype=float), rewards.shape)
    advantages = np.zeros_like(rewards)
    carry = 0.0
    for i in range(rewards.size - 1, -1, -1):
        delta = rewards[i] + gammas[i] * values[i + 1] - values[i]
        carry = delta + gammas[i] * lam * carry
        advantages[i] = carry
    return advantages, advantages + values[:-1]
