"""Monte Carlo sampling of threshold-crossing times and base-cost constants.

Paths are advanced on a fixed Euler grid.  Discrete monitoring alone misses
excursions that cross the threshold and come back inside one step, which
biases crossing times high; the optional Brownian-bridge correction removes
that bias by firing within each step with the exact conditional crossing
probability exp(-2 (d - |x|)(d - |x'|) / h) against the nearer barrier.
Crossings are attributed to the end of the step they occur in, so a bias of
order one step remains - far below the Monte Carlo error at the step sizes
enforced here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

try:
    from numpy import trapezoid as _trapezoid
except ImportError:  # numpy < 2
    from numpy import trapz as _trapezoid

from .cost import EtcConstants
from .errors import EstimationError, HorizonExceededError, ParameterError
from .rng import rng_stream_for
from .stats import ratio_batch_means

__all__ = ["PathConfig", "sample_exit_time", "estimate_constants",
           "pair_dispersion", "first_crossing_scan"]

_MAX_SEED = 2**64
# bridge probabilities below exp(-44) cannot fire over any realistic run
_BRIDGE_EXPONENT_CUTOFF = 22.0
_CHUNK_START = 256
_CHUNK_MAX = 8192
# grid must resolve the crossing scale: step <= threshold^2 / _MIN_STEPS_PER_SCALE
_MIN_STEPS_PER_SCALE = 100


@dataclass(frozen=True)
class PathConfig:
    """Discretisation and reproducibility knobs for path sampling."""

    step: float = 1e-3
    bridge_correction: bool = True
    horizon_factor: float = 64.0
    seed: int = 0

    def __post_init__(self):
        if not self.step > 0.0:
            raise ParameterError(f"step must be > 0, got {self.step}")
        if not self.horizon_factor > 1.0:
            raise ParameterError(
                f"horizon_factor must be > 1, got {self.horizon_factor}")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise ParameterError(f"seed must be an integer, got {self.seed!r}")
        if not 0 <= self.seed < _MAX_SEED:
            raise ParameterError(f"seed must be in [0, 2**64), got {self.seed}")


def require_resolution(step: float, scale: float, what: str) -> None:
    """Reject step sizes too coarse for the quantity being resolved."""
    if step > scale / _MIN_STEPS_PER_SCALE:
        raise ParameterError(
            f"step {step} too coarse: need step <= {what}/{_MIN_STEPS_PER_SCALE} "
            f"= {scale / _MIN_STEPS_PER_SCALE:.3e}")


def pair_dispersion(states: np.ndarray) -> np.ndarray:
    """Sum of squared pairwise differences, row-wise.

    For a complete graph this equals the Laplacian quadratic form x'Lx;
    computed as n*sum(x^2) - (sum x)^2 to stay O(n) per row.
    """
    states = np.atleast_2d(states)
    n = states.shape[1]
    sq = np.einsum("ij,ij->i", states, states)
    tot = states.sum(axis=1)
    return n * sq - tot * tot


def first_crossing_scan(dev0: np.ndarray, increments: np.ndarray,
                        threshold: float, step: float,
                        uniforms: np.ndarray | None):
    """Scan one chunk of increments for the first threshold crossing.

    Parameters
    ----------
    dev0 : (n,) deviations at the chunk start (all inside the threshold)
    increments : (K, n) Gaussian increments already scaled by sqrt(step)
    uniforms : (K, n) bridge-test draws, or None to disable the correction

    Returns
    -------
    (row, agent, dev_path) where ``row`` is the first step index whose end
    state or bridge test crossed (-1 if none), ``agent`` the lowest-index
    crossing agent in that row (-1 if none), and ``dev_path`` the (K, n)
    deviation path ignoring the crossing.
    """
    dev_path = dev0 + np.cumsum(increments, axis=0)
    abs_now = np.abs(dev_path)
    hits = abs_now >= threshold
    if uniforms is not None:
        prev = np.empty_like(dev_path)
        prev[0] = dev0
        prev[1:] = dev_path[:-1]
        gap = (threshold - np.abs(prev)) * (threshold - abs_now)
        prob = np.zeros_like(gap)
        near = (gap < _BRIDGE_EXPONENT_CUTOFF * step) & ~hits
        # rows after an endpoint hit can have prev beyond the barrier; the
        # clamp keeps exp() finite there without affecting the first hit
        prob[near] = np.exp(-2.0 * np.maximum(gap[near], 0.0) / step)
        hits |= uniforms < prob
    rows = hits.any(axis=1)
    if not rows.any():
        return -1, -1, dev_path
    row = int(np.argmax(rows))
    agent = int(np.argmax(hits[row]))
    return row, agent, dev_path


def sample_exit_time(num_agents: int, threshold: float, config: PathConfig,
                     rng: np.random.Generator):
    """Simulate until the first of ``num_agents`` motions crosses ``threshold``.

    Returns ``(exit_time, path)`` where ``path`` has one row per grid point
    from t = 0 through the crossing step (inclusive), for cost integration.
    Raises HorizonExceededError if no crossing occurs within
    ``horizon_factor * threshold**2`` of simulated time.
    """
    if not isinstance(num_agents, int) or num_agents < 1:
        raise ParameterError(f"num_agents must be an integer >= 1, got {num_agents!r}")
    if not threshold > 0.0:
        raise ParameterError(f"threshold must be > 0, got {threshold}")
    require_resolution(config.step, threshold * threshold, "threshold^2")

    h = config.step
    sqrt_h = math.sqrt(h)
    horizon_steps = int(math.ceil(config.horizon_factor * threshold * threshold / h))
    dev = np.zeros(num_agents)
    pieces = [dev[np.newaxis, :].copy()]
    base = 0
    chunk = _CHUNK_START
    while True:
        k = min(chunk, horizon_steps - base)
        inc = rng.standard_normal((k, num_agents)) * sqrt_h
        uni = rng.random((k, num_agents)) if config.bridge_correction else None
        row, _, dev_path = first_crossing_scan(dev, inc, threshold, h, uni)
        if row >= 0:
            pieces.append(dev_path[:row + 1])
            exit_time = (base + row + 1) * h
            return exit_time, np.concatenate(pieces, axis=0)
        pieces.append(dev_path)
        dev = dev_path[-1]
        base += k
        if base >= horizon_steps:
            raise HorizonExceededError(
                f"no crossing within horizon {horizon_steps * h:.1f} "
                f"({config.horizon_factor} threshold^2); check step/threshold",
                partial_time=base * h)
        chunk = min(2 * chunk, _CHUNK_MAX)


def estimate_constants(num_agents: int, replications: int,
                       config: PathConfig) -> EtcConstants:
    """Estimate mean crossing time and loss/delay-free cost at unit threshold.

    Each replication simulates one inter-reset interval: ``num_agents``
    motions start from a common value (differences start at zero because a
    reset aligns everybody) and run until the first crosses the unit
    threshold.  The base cost is the renewal-reward ratio

        E[integral of sum_{i<j} (x_i - x_j)^2 dt] / E[T],

    accumulated by the trapezoid rule on the sampling grid, with batch-means
    standard errors.  Replication ``r`` always consumes the substream
    ``rng_stream_for(config.seed, r)``, so results do not depend on
    execution order.
    """
    if not isinstance(num_agents, int) or num_agents < 1:
        raise ParameterError(f"num_agents must be an integer >= 1, got {num_agents!r}")
    if replications < 4:
        raise EstimationError(
            f"need at least 4 replications for batch means, got {replications}")

    h = config.step
    times = np.empty(replications)
    integrals = np.empty(replications)
    for r in range(replications):
        rng = rng_stream_for(config.seed, r)
        exit_time, path = sample_exit_time(num_agents, 1.0, config, rng)
        times[r] = exit_time
        if num_agents > 1:
            integrals[r] = _trapezoid(pair_dispersion(path), dx=h)
        else:
            integrals[r] = 0.0

    est = ratio_batch_means(integrals, times)
    return EtcConstants(num_agents=num_agents,
                        mean_exit_time=est.den_mean,
                        mean_exit_se=est.den_se,
                        base_cost=est.ratio,
                        base_cost_se=est.ratio_se,
                        replications=replications,
                        step=h,
                        seed=config.seed)
