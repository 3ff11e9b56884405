import numpy as np
import pytest

from debrisim.dtn import TrafficModel, default_topology, run_dtn
from debrisim.dynamics import OrbitalConfig, run_deorbit


@pytest.fixture(scope="session")
def default_orbital() -> OrbitalConfig:
    return OrbitalConfig()


@pytest.fixture(scope="session")
def default_deorbit(default_orbital):
    """The 800 -> 100 km reference run, shared across test modules."""
    return run_deorbit(800.0, 100.0, default_orbital)


@pytest.fixture(scope="session")
def default_dtn_run():
    """The default six-hour store-and-forward run."""
    return run_dtn(default_topology(), TrafficModel(), 21600.0, seed=42)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
