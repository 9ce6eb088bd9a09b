"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "ConsensimError",
    "ParameterError",
    "ConfigurationError",
    "DivergentCostError",
    "EstimationError",
    "NumericalError",
    "HorizonExceededError",
]


class ConsensimError(Exception):
    """Common base class so callers can catch everything from this package."""


class ParameterError(ConsensimError, ValueError):
    """An argument is outside the domain an operation is defined on."""


class ConfigurationError(ConsensimError, ValueError):
    """A config file, constants file, or CLI combination is unusable."""


class DivergentCostError(ConsensimError, ValueError):
    """Requested cost is infinite (loss probability 1 starves the network)."""


class EstimationError(ConsensimError, ValueError):
    """Not enough data to form the requested estimate (e.g. < 2 batches)."""


class NumericalError(ConsensimError, RuntimeError):
    """A series or quadrature failed to reach the requested accuracy.

    Carries the best value obtained so far and the achieved error bound so
    callers can decide whether the partial result is still usable.
    """

    def __init__(self, message: str, partial_value: float, error_bound: float):
        super().__init__(message)
        self.partial_value = partial_value
        self.error_bound = error_bound


class HorizonExceededError(ConsensimError, RuntimeError):
    """A sampled path outlived its safety horizon.

    With the default horizon this has vanishing probability, so hitting it
    normally means the threshold/step combination is inconsistent.  The
    simulated time reached is attached for diagnosis.
    """

    def __init__(self, message: str, partial_time: float):
        super().__init__(message)
        self.partial_time = partial_time
