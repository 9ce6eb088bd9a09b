"""Consensus cost of time-triggered vs event-triggered control on a shared channel.

The package quantifies the long-run disagreement cost of N single-integrator
agents that exchange state over one lossy, delayed broadcast channel, under
two triggering schemes (periodic and threshold-based) and two medium-access
policies (TDMA and pure ALOHA).  Closed forms for the survival series, the
loss probabilities, and the normalized cost curves live in
:mod:`consensim.exit_analytics` and :mod:`consensim.cost`; the Monte Carlo
machinery that calibrates and cross-checks them lives in
:mod:`consensim.sampling` and :mod:`consensim.network_sim`; the ``consensim``
command-line tool (see :mod:`consensim.cli`) ties it together.
"""

__version__ = "0.1.0"

from .errors import (ConfigurationError, ConsensimError, DivergentCostError,
                     EstimationError, HorizonExceededError, NumericalError,
                     ParameterError)
from .rng import rng_stream_for
from .exit_analytics import (IntervalExitQuery, SurvivalResult,
                             aloha_loss_probability, expected_min_exit,
                             survival_min_of_n, survival_single)
from .cost import (CostBreakdown, EtcConstants, LoadPoint, NetworkModel,
                   Protocol, curve_sweep, decompose_cost, default_rho_grid,
                   etc_pa_normalized, mean_inter_success, tdma_loss_probability,
                   ttc_cost, ttc_tdma_normalized)
from .stats import RatioEstimate, batch_count, batch_mean_se, ratio_batch_means
from .sampling import (PathConfig, estimate_constants, first_crossing_scan,
                       pair_dispersion, sample_exit_time)
from .network_sim import (AgentEnsemble, EventLog, EventRecord, Scheme,
                          SimOutcome, simulate_networked)
from .config import ExperimentConfig, apply_overrides, load_config
from .constants_io import (FORMAT_VERSION, ConstantsFile, load_constants,
                           merge_entries, save_constants)

__all__ = [
    "__version__",
    # errors
    "ConsensimError", "ParameterError", "ConfigurationError",
    "DivergentCostError", "EstimationError", "NumericalError",
    "HorizonExceededError",
    # analytics
    "IntervalExitQuery", "SurvivalResult", "survival_single",
    "survival_min_of_n", "expected_min_exit", "aloha_loss_probability",
    # cost model
    "Protocol", "NetworkModel", "EtcConstants", "CostBreakdown", "LoadPoint",
    "tdma_loss_probability", "ttc_cost", "ttc_tdma_normalized",
    "etc_pa_normalized", "mean_inter_success", "decompose_cost",
    "curve_sweep", "default_rho_grid",
    # statistics
    "RatioEstimate", "batch_count", "ratio_batch_means", "batch_mean_se",
    # sampling and simulation
    "PathConfig", "sample_exit_time", "estimate_constants",
    "pair_dispersion", "first_crossing_scan",
    "Scheme", "AgentEnsemble", "EventRecord", "EventLog", "SimOutcome",
    "simulate_networked", "rng_stream_for",
    # experiment plumbing
    "ExperimentConfig", "load_config", "apply_overrides",
    "ConstantsFile", "FORMAT_VERSION", "load_constants", "save_constants",
    "merge_entries",
]
