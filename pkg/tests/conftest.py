import json
import pathlib

import pytest

from consensim import PathConfig, estimate_constants

DATA_DIR = pathlib.Path(__file__).parent / "data"

# Seed for everything estimated once per test session.  Frozen so that the
# acceptance numbers in CI runs are comparable across machines.
SESSION_SEED = 20240815
FULL_SIZES = (2, 3, 6, 12, 72)
FULL_REPLICATIONS = 20000


@pytest.fixture(scope="session")
def survival_oracle():
    with open(DATA_DIR / "survival_oracle.json") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def exit_oracle():
    with open(DATA_DIR / "exit_oracle.json") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def full_constants():
    """Desk-scale constants for the acceptance criteria (runs ~30 s once)."""
    cfg = PathConfig(step=1e-3, bridge_correction=True, seed=SESSION_SEED)
    return {n: estimate_constants(n, FULL_REPLICATIONS, cfg) for n in FULL_SIZES}
