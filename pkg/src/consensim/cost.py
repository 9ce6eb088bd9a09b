"""Closed-form consensus-cost model for a complete graph of single integrators.

Costs are long-run time averages of the disagreement x'Lx, which on a
complete graph equals the sum of squared pairwise differences.  Every
formula factors into the same three pieces:

    total = base + loss_penalty + delay_penalty

where the base term is the cost of the idealized loss- and delay-free
scheme, each lost packet stretches the effective inter-reset interval by a
geometric factor p/(1-p), and each unit of arrival delay adds exactly
N(N-1) per unit time.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DivergentCostError, ParameterError
from .exit_analytics import aloha_loss_probability

__all__ = [
    "Protocol",
    "NetworkModel",
    "EtcConstants",
    "CostBreakdown",
    "LoadPoint",
    "tdma_loss_probability",
    "ttc_cost",
    "ttc_tdma_normalized",
    "etc_pa_normalized",
    "mean_inter_success",
    "decompose_cost",
    "curve_sweep",
    "default_rho_grid",
]

_MAX_SEED = 2**64


class Protocol(enum.Enum):
    """Medium-access protocol sharing the single channel."""

    TDMA = "tdma"
    PURE_ALOHA = "pure-aloha"


@dataclass(frozen=True)
class NetworkModel:
    """Shared-channel model: every packet occupies ``transmission_time``."""

    transmission_time: float
    protocol: Protocol

    def __post_init__(self):
        if not self.transmission_time > 0.0:
            raise ParameterError(
                f"transmission_time must be > 0, got {self.transmission_time}")
        if not isinstance(self.protocol, Protocol):
            raise ParameterError(f"protocol must be a Protocol, got {self.protocol!r}")


@dataclass(frozen=True)
class EtcConstants:
    """Monte Carlo constants of the event-triggered scheme at unit threshold.

    ``mean_exit_time`` estimates the mean inter-event time and ``base_cost``
    the loss- and delay-free cost (ratio of accumulated disagreement to
    accumulated time), both with batch-means standard errors.  A single
    agent never disagrees with itself, so ``base_cost`` is exactly 0 for
    ``num_agents == 1``.
    """

    num_agents: int
    mean_exit_time: float
    mean_exit_se: float
    base_cost: float
    base_cost_se: float
    replications: int
    step: float
    seed: int

    def __post_init__(self):
        if not isinstance(self.num_agents, int) or self.num_agents < 1:
            raise ParameterError(f"num_agents must be an integer >= 1, got {self.num_agents!r}")
        if not self.mean_exit_time > 0.0:
            raise ParameterError(f"mean_exit_time must be > 0, got {self.mean_exit_time}")
        if self.mean_exit_se < 0.0 or self.base_cost_se < 0.0:
            raise ParameterError("standard errors must be >= 0")
        if self.base_cost < 0.0:
            raise ParameterError(f"base_cost must be >= 0, got {self.base_cost}")
        if self.num_agents == 1 and self.base_cost != 0.0:
            raise ParameterError("base_cost must be exactly 0 for a single agent")
        if self.replications < 1:
            raise ParameterError(f"replications must be >= 1, got {self.replications}")
        if not self.step > 0.0:
            raise ParameterError(f"step must be > 0, got {self.step}")
        if not 0 <= self.seed < _MAX_SEED:
            raise ParameterError(f"seed must be in [0, 2**64), got {self.seed}")


@dataclass(frozen=True)
class CostBreakdown:
    """Additive decomposition of a consensus cost."""

    base: float
    loss_penalty: float
    delay_penalty: float
    total: float

    def __post_init__(self):
        if self.base < 0.0 or self.loss_penalty < 0.0 or self.delay_penalty < 0.0:
            raise ParameterError("cost components must be >= 0")
        if self.total != self.base + self.loss_penalty + self.delay_penalty:
            raise ParameterError("total must equal base + loss_penalty + delay_penalty")

    @classmethod
    def assemble(cls, base: float, loss_penalty: float, delay_penalty: float) -> "CostBreakdown":
        return cls(base, loss_penalty, delay_penalty,
                   base + loss_penalty + delay_penalty)


@dataclass(frozen=True)
class LoadPoint:
    """One point of a normalized cost-versus-load curve."""

    rho: float
    num_agents: int
    cost_tt_tdma: Optional[float]
    cost_et_pa: float
    loss_prob_pa: float


def tdma_loss_probability(period: float, transmission_time: float) -> float:
    """0 when the schedule period fits the packet, 1 when it cannot."""
    if not period > 0.0:
        raise ParameterError(f"period must be > 0, got {period}")
    if not transmission_time > 0.0:
        raise ParameterError(f"transmission_time must be > 0, got {transmission_time}")
    return 0.0 if period >= transmission_time else 1.0


def _check_loss_prob(loss_prob: float) -> float:
    if not 0.0 <= loss_prob <= 1.0:
        raise ParameterError(f"loss probability must be in [0, 1], got {loss_prob}")
    if loss_prob == 1.0:
        raise DivergentCostError(
            "loss probability 1 means no packet ever arrives; the cost diverges")
    return loss_prob


def ttc_cost(num_agents: int, period: float, loss_prob: float,
             mean_delay: float) -> CostBreakdown:
    """Cost of the time-triggered scheme with period, loss, and delay.

    base = N(N-1) T/2, each loss stretches the inter-success interval
    (loss term N(N-1) p T/(1-p)), and delay adds N(N-1) E[d].
    """
    if not isinstance(num_agents, int) or num_agents < 1:
        raise ParameterError(f"num_agents must be an integer >= 1, got {num_agents!r}")
    if not period > 0.0:
        raise ParameterError(f"period must be > 0, got {period}")
    if mean_delay < 0.0:
        raise ParameterError(f"mean_delay must be >= 0, got {mean_delay}")
    _check_loss_prob(loss_prob)
    pairs = num_agents * (num_agents - 1)
    base = pairs * period / 2.0
    loss = pairs * loss_prob * period / (1.0 - loss_prob)
    delay = pairs * mean_delay
    return CostBreakdown.assemble(base, loss, delay)


def ttc_tdma_normalized(rho: float) -> float:
    """Normalized (per pair, per transmission time) TDMA cost 1/(2 rho) + 1.

    Defined for loads ``0 < rho <= 1``; beyond 1 the schedule period is
    shorter than the packet and every packet is lost.
    """
    if not rho > 0.0:
        raise ParameterError(f"rho must be > 0, got {rho}")
    if rho > 1.0:
        raise ParameterError(
            f"rho must be <= 1 for TDMA (all packets are lost beyond that load), got {rho}")
    return 0.5 / rho + 1.0


def etc_pa_normalized(rho: float, constants: EtcConstants, loss_prob: float) -> float:
    """Normalized event-triggered cost over unslotted random access.

    base_cost/(N(N-1) mean_exit) / rho  +  p/(1-p) / rho  +  1.
    """
    if not rho > 0.0:
        raise ParameterError(f"rho must be > 0, got {rho}")
    if constants.num_agents < 2:
        raise ParameterError("normalized cost needs at least 2 agents")
    _check_loss_prob(loss_prob)
    pairs = constants.num_agents * (constants.num_agents - 1)
    base_ratio = constants.base_cost / (pairs * constants.mean_exit_time)
    return base_ratio / rho + (loss_prob / (1.0 - loss_prob)) / rho + 1.0


def mean_inter_success(mean_inter_event: float, loss_prob: float) -> float:
    """Mean gap between *successful* transmissions: E[T] / (1 - p)."""
    if not mean_inter_event > 0.0:
        raise ParameterError(f"mean_inter_event must be > 0, got {mean_inter_event}")
    _check_loss_prob(loss_prob)
    return mean_inter_event / (1.0 - loss_prob)


def decompose_cost(base: float, num_agents: int, loss_prob: float,
                   mean_inter_event: float, mean_delay: float) -> CostBreakdown:
    """Reassemble a total cost from its base, loss, and delay pieces.

    loss_penalty = N(N-1) p E[T]/(1-p), delay_penalty = N(N-1) E[d].
    """
    if base < 0.0:
        raise ParameterError(f"base must be >= 0, got {base}")
    if not isinstance(num_agents, int) or num_agents < 1:
        raise ParameterError(f"num_agents must be an integer >= 1, got {num_agents!r}")
    if not mean_inter_event > 0.0:
        raise ParameterError(f"mean_inter_event must be > 0, got {mean_inter_event}")
    if mean_delay < 0.0:
        raise ParameterError(f"mean_delay must be >= 0, got {mean_delay}")
    _check_loss_prob(loss_prob)
    pairs = num_agents * (num_agents - 1)
    loss = pairs * loss_prob * mean_inter_event / (1.0 - loss_prob)
    delay = pairs * mean_delay
    return CostBreakdown.assemble(base, loss, delay)


def default_rho_grid(rho_min: float = 0.01, rho_max: float = 1.0,
                     count: int = 40) -> np.ndarray:
    """Geometric load grid; the interesting structure sits at low load."""
    if not 0.0 < rho_min < rho_max:
        raise ParameterError(f"need 0 < rho_min < rho_max, got [{rho_min}, {rho_max}]")
    if count < 2:
        raise ParameterError(f"count must be >= 2, got {count}")
    return np.geomspace(rho_min, rho_max, count)


def curve_sweep(n_list: Iterable[int], rho_grid: Sequence[float],
                constants_by_n: Mapping[int, EtcConstants],
                tolerance: float = 1e-12) -> list[LoadPoint]:
    """Evaluate both normalized cost curves over a load grid.

    The TDMA column is populated only for ``rho <= 1``.  If the loss
    probability reaches exactly 1 at some load, the event-triggered cost is
    reported as ``inf`` rather than aborting the sweep.
    """
    n_list = list(n_list)
    rho_grid = np.asarray(rho_grid, dtype=float)
    if rho_grid.ndim != 1 or rho_grid.size == 0:
        raise ParameterError("rho_grid must be a non-empty 1-d sequence")
    if not np.all(rho_grid > 0.0):
        raise ParameterError("every rho must be > 0")
    if not np.all(np.diff(rho_grid) > 0.0):
        raise ParameterError("rho_grid must be strictly increasing")
    missing = [n for n in n_list if n not in constants_by_n]
    if missing:
        raise ConfigurationError(
            f"no constants available for num_agents = {missing}; "
            "run the constants estimation for those sizes first")

    points: list[LoadPoint] = []
    for n in n_list:
        constants = constants_by_n[n]
        if constants.num_agents != n:
            raise ConfigurationError(
                f"constants entry keyed {n} describes num_agents = {constants.num_agents}")
        for rho in rho_grid:
            rho = float(rho)
            p = aloha_loss_probability(rho, n, constants.mean_exit_time, tolerance)
            if p < 1.0:
                et = etc_pa_normalized(rho, constants, p)
            else:
                et = math.inf
            tt = ttc_tdma_normalized(rho) if rho <= 1.0 else None
            points.append(LoadPoint(rho=rho, num_agents=n, cost_tt_tdma=tt,
                                    cost_et_pa=et, loss_prob_pa=p))
    return points
