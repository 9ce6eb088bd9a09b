"""Batch-means statistics for renewal-reward (ratio) estimators.

The long-run time average of an accumulating quantity equals
E[reward per cycle] / E[cycle length]; both expectations are estimated from
the same replications, so the ratio's standard error is computed with the
delta method applied to nonoverlapping batch means.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import EstimationError

__all__ = ["RatioEstimate", "batch_count", "ratio_batch_means", "batch_mean_se"]

_MAX_BATCHES = 32


def batch_count(samples: int) -> int:
    """Number of nonoverlapping batches used for ``samples`` observations."""
    if samples < 4:
        raise EstimationError(
            f"need at least 4 observations to form 2 batches, got {samples}")
    return min(_MAX_BATCHES, samples // 2)


class RatioEstimate:
    """Point estimates and standard errors for a ratio of means."""

    __slots__ = ("ratio", "ratio_se", "den_mean", "den_se", "batches")

    def __init__(self, ratio, ratio_se, den_mean, den_se, batches):
        self.ratio = ratio
        self.ratio_se = ratio_se
        self.den_mean = den_mean
        self.den_se = den_se
        self.batches = batches


def ratio_batch_means(numerators, denominators, n_batches: int | None = None) -> RatioEstimate:
    """Estimate mean(numerators)/mean(denominators) with batch-means errors.

    Parameters
    ----------
    numerators, denominators : array_like, same length
        Per-replication (or per-cycle) accumulated reward and duration.
    n_batches : int, optional
        Override the automatic batch count.

    Returns
    -------
    RatioEstimate
        ``ratio`` is the ratio of overall means; ``ratio_se`` comes from the
        delta method on batch means; ``den_mean``/``den_se`` describe the
        denominator alone.
    """
    num = np.asarray(numerators, dtype=float)
    den = np.asarray(denominators, dtype=float)
    if num.shape != den.shape or num.ndim != 1:
        raise EstimationError("numerators and denominators must be equal-length 1-d arrays")
    m = num.size
    b = batch_count(m) if n_batches is None else int(n_batches)
    if b < 2 or b > m:
        raise EstimationError(f"batch count {b} not feasible for {m} observations")

    den_mean = float(np.mean(den))
    if den_mean <= 0.0:
        raise EstimationError("denominator mean must be positive")
    ratio = float(np.mean(num)) / den_mean

    num_b = np.array([chunk.mean() for chunk in np.array_split(num, b)])
    den_b = np.array([chunk.mean() for chunk in np.array_split(den, b)])
    cov = np.cov(num_b, den_b, ddof=1)
    var_n, var_d, cov_nd = cov[0, 0], cov[1, 1], cov[0, 1]
    # delta method for R = N/D around the batch means
    var_ratio = (var_n - 2.0 * ratio * cov_nd + ratio * ratio * var_d) / (den_mean * den_mean)
    ratio_se = math.sqrt(max(var_ratio, 0.0) / b)
    den_se = math.sqrt(max(var_d, 0.0) / b)
    return RatioEstimate(ratio, ratio_se, den_mean, den_se, b)


def batch_mean_se(samples, n_batches: int | None = None) -> tuple[float, float]:
    """Mean of ``samples`` with a batch-means standard error.

    Robust to the short-range dependence that sequential simulation output
    (loss indicators, inter-success gaps) carries, unlike the naive
    std/sqrt(m) formula.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise EstimationError("samples must be a 1-d array")
    m = x.size
    b = batch_count(m) if n_batches is None else int(n_batches)
    if b < 2 or b > m:
        raise EstimationError(f"batch count {b} not feasible for {m} observations")
    means = np.array([chunk.mean() for chunk in np.array_split(x, b)])
    se = math.sqrt(max(float(np.var(means, ddof=1)), 0.0) / b)
    return float(x.mean()), se
