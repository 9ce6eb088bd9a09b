"""Reproducible random-number streams for parallel replications."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError

__all__ = ["rng_stream_for"]

_MAX_SEED = 2**64


def rng_stream_for(seed: int, replication_index: int) -> np.random.Generator:
    """Return the random stream owned by one replication.

    The stream is derived from ``(seed, replication_index)`` through a
    counter-based generator (Philox) keyed via ``SeedSequence`` spawning, so

    * the same pair always yields a bit-identical sequence, and
    * distinct replication indices yield statistically independent streams,

    independent of the order replications are executed in or how they are
    distributed over workers.
    """
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ParameterError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < _MAX_SEED:
        raise ParameterError(f"seed must be in [0, 2**64), got {seed}")
    if not isinstance(replication_index, (int, np.integer)) or isinstance(replication_index, bool):
        raise ParameterError(
            f"replication_index must be an integer, got {replication_index!r}")
    if replication_index < 0:
        raise ParameterError(
            f"replication_index must be >= 0, got {replication_index}")
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=(int(replication_index),))
    return np.random.Generator(np.random.Philox(ss))
