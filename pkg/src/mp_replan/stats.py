"""Aggregate evaluation statistics: interquartile mean and stratified bootstrap."""

from __future__ import annotations

import numpy as np


def iqm(values) -> float:
    """Mean of the values strictly inside the interquartile band.

    Rank-based trimming: floor(n / 4) values are dropped from each end of the
    sorted array.
    """
    arr = np.sort(np.asarray(values, dtype=float).ravel())
    if arr.size < 4:
        raise ValueError(f"iqm needs at least 4 values, got {arr.size}")
    trim = arr.size // 4
    return float(arr[trim:arr.size - trim].mean())


def stratified_bootstrap_ci(scores, statistic=iqm, reps: int = 2000,
                            level: float = 0.95,
                            rng: np.random.Generator | None = None):
    """Percentile bootstrap interval with resampling stratified by seed.

    scores is a (num_seeds x num_evals) matrix; each bootstrap replicate
    resamples evaluations within every seed row, then recomputes the
    statistic on the pooled values.  Deterministic for a given rng seed, and
    the resample stream does not depend on the requested level, so intervals
    at increasing levels nest.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim == 1:
        scores = scores[None, :]
    if scores.size == 0 or scores.shape[1] == 0:
        raise ValueError("scores matrix must be non-empty")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if reps < 100:
        raise ValueError(f"reps must be at least 100, got {reps}")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if rng is None:
        rng = np.random.default_rng(0)
    n_seeds, n_evals = scores.shape
    stats = np.empty(reps)
    rows = np.arange(n_seeds)[:, None]
    for rep in range(reps):
        picks = rng.integers(0, n_evals, size=(n_seeds, n_evals))
        stats[rep] = statistic(scores[rows, picks])
    alpha = 0.5 * (1.0 - level)
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def summarize(scores, reps: int = 2000, level: float = 0.95, seed: int = 0) -> dict:
    """Point estimate plus confidence interval, ready for JSON emission."""
    scores = np.asarray(scores, dtype=float)
    lo, hi = stratified_bootstrap_ci(scores, iqm, reps=reps, level=level,
                                     rng=np.random.default_rng(seed))
    return {
        "statistic": "iqm",
        "point": iqm(scores),
        "ci_low": lo,
        "ci_high": hi,
        "level": level,
        "reps": reps,
        "num_seeds": int(scores.shape[0] if scores.ndim == 2 else 1),
        "num_evals": int(scores.shape[-1]),
    }
