"""Experiment configuration: defaults, TOML file loading, overrides.

Precedence, lowest to highest: built-in defaults, config file, environment
(seed only, handled by the CLI), command-line flags.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from typing import Any, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigurationError

__all__ = ["ExperimentConfig", "load_config", "apply_overrides", "canonical_digest"]

_MAX_SEED = 2**64

# section -> key -> config field
_SCHEMA = {
    None: {"seed": "seed"},
    "agents": {"n_list": "n_list"},
    "grid": {"rho_min": "rho_min", "rho_max": "rho_max", "rho_count": "rho_count"},
    "simulation": {"replications": "replications", "step": "step",
                   "bridge_correction": "bridge_correction",
                   "num_events": "num_events"},
    "output": {"constants_path": "constants_path", "out_path": "out_path"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment run needs, in one serializable record.

    Defaults are the desk-scale profile: small enough to finish the full
    validation suite in minutes, large enough for the 3-sigma checks.
    """

    n_list: tuple[int, ...] = (2, 3, 6, 12, 72)
    rho_min: float = 0.01
    rho_max: float = 1.0
    rho_count: int = 40
    replications: int = 20000
    step: float = 1e-3
    bridge_correction: bool = True
    num_events: int = 10000
    seed: int = 0
    constants_path: str = "constants.json"
    out_path: Optional[str] = None

    def __post_init__(self):
        if not self.n_list:
            raise ConfigurationError("n_list must not be empty")
        for n in self.n_list:
            if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                raise ConfigurationError(
                    f"n_list entries must be integers >= 1, got {n!r}")
        if not self.rho_min > 0.0:
            raise ConfigurationError(f"rho_min must be > 0, got {self.rho_min}")
        if not self.rho_max >= self.rho_min:
            raise ConfigurationError(
                f"rho_max {self.rho_max} must be >= rho_min {self.rho_min}")
        if not isinstance(self.rho_count, int) or self.rho_count < 2:
            raise ConfigurationError(
                f"rho_count must be an integer >= 2, got {self.rho_count!r}")
        if not isinstance(self.replications, int) or self.replications < 100:
            raise ConfigurationError(
                f"replications must be an integer >= 100, got {self.replications!r}")
        if not self.step > 0.0:
            raise ConfigurationError(f"step must be > 0, got {self.step}")
        if not isinstance(self.num_events, int) or self.num_events < 2:
            raise ConfigurationError(
                f"num_events must be an integer >= 2, got {self.num_events!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) \
                or not 0 <= self.seed < _MAX_SEED:
            raise ConfigurationError(
                f"seed must be an integer in [0, 2**64), got {self.seed!r}")

    def rho_grid(self):
        from .cost import default_rho_grid
        return default_rho_grid(self.rho_min, self.rho_max, self.rho_count)

    def digest(self) -> str:
        """Hash of the result-determining fields (output paths excluded)."""
        record = dataclasses.asdict(self)
        record.pop("constants_path")
        record.pop("out_path")
        return canonical_digest(record)


def canonical_digest(mapping: dict[str, Any]) -> str:
    blob = json.dumps(mapping, sort_keys=True, separators=(",", ":"), default=list)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def load_config(path: Optional[str] = None) -> ExperimentConfig:
    """Build a config from a TOML file, or pure defaults when path is None."""
    if path is None:
        return ExperimentConfig()
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"cannot parse config {path}: {exc}") from exc

    fields: dict[str, Any] = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            section = _SCHEMA.get(key)
            if section is None:
                raise ConfigurationError(f"unknown config section [{key}] in {path}")
            for sub, subval in value.items():
                if sub not in section:
                    raise ConfigurationError(
                        f"unknown key {sub!r} in section [{key}] of {path}")
                fields[section[sub]] = subval
        else:
            top = _SCHEMA[None]
            if key not in top:
                raise ConfigurationError(f"unknown top-level key {key!r} in {path}")
            fields[top[key]] = value
    if "n_list" in fields:
        fields["n_list"] = tuple(fields["n_list"])
    return ExperimentConfig(**fields)


def apply_overrides(config: ExperimentConfig, **overrides: Any) -> ExperimentConfig:
    """Return a copy with the non-None overrides applied."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    if "n_list" in changes:
        changes["n_list"] = tuple(changes["n_list"])
    if not changes:
        return config
    return dataclasses.replace(config, **changes)
