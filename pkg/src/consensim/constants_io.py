"""Persistence for estimated constants (JSON, versioned).

The constants are expensive to estimate (minutes for the large ensembles),
so they are cached in a small versioned JSON file and merged on re-runs.
Readers must refuse a format_version they do not know rather than guess.
Serialization is canonical - sorted keys, fixed separators, entries ordered
by ensemble size - so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Iterable

from . import __version__
from .cost import EtcConstants
from .errors import ConfigurationError

__all__ = ["FORMAT_VERSION", "ConstantsFile", "load_constants", "save_constants",
           "merge_entries", "default_provenance"]

FORMAT_VERSION = 1

_ENTRY_FIELDS = tuple(f.name for f in dataclasses.fields(EtcConstants))


@dataclass(frozen=True)
class ConstantsFile:
    entries: tuple[EtcConstants, ...]
    provenance: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.format_version != FORMAT_VERSION:
            raise ConfigurationError(
                f"unsupported constants format_version {self.format_version}; "
                f"this tool reads version {FORMAT_VERSION}")
        sizes = [e.num_agents for e in self.entries]
        if len(sizes) != len(set(sizes)):
            raise ConfigurationError(
                f"duplicate num_agents in constants entries: {sorted(sizes)}")
        object.__setattr__(self, "entries",
                           tuple(sorted(self.entries, key=lambda e: e.num_agents)))

    def by_agents(self) -> dict[int, EtcConstants]:
        return {e.num_agents: e for e in self.entries}


def merge_entries(existing: Iterable[EtcConstants],
                  new: Iterable[EtcConstants]) -> tuple[EtcConstants, ...]:
    """Replace per ensemble size: new entries win, others are kept."""
    merged = {e.num_agents: e for e in existing}
    for e in new:
        merged[e.num_agents] = e
    return tuple(merged[n] for n in sorted(merged))


def save_constants(path: str, constants: ConstantsFile) -> None:
    payload = {
        "format_version": constants.format_version,
        "provenance": constants.provenance,
        "entries": [dataclasses.asdict(e) for e in constants.entries],
    }
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_constants(path: str) -> ConstantsFile:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"cannot parse constants file {path}: {exc}") from exc
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise ConfigurationError(f"{path} is not a constants file (no format_version)")
    entries = []
    for raw in payload.get("entries", []):
        unknown = set(raw) - set(_ENTRY_FIELDS)
        if unknown:
            raise ConfigurationError(
                f"constants entry in {path} has unknown fields {sorted(unknown)}")
        entries.append(EtcConstants(**raw))
    return ConstantsFile(entries=tuple(entries),
                         provenance=payload.get("provenance", {}),
                         format_version=payload["format_version"])


def default_provenance(config_digest: str, seed: int) -> dict:
    return {"tool": f"consensim {__version__}",
            "config_digest": config_digest,
            "seed": seed}
