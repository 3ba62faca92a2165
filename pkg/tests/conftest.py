import numpy as np
import pytest

from quantum_leakage.config import SolverConfig, reset_config
from quantum_leakage.core.encoder import basis_encoding


@pytest.fixture(autouse=True)
def _fresh_config(monkeypatch):
    monkeypatch.delenv("QLEAK_WORKERS", raising=False)
    monkeypatch.delenv("QLEAK_DEBUG", raising=False)
    reset_config()
    yield
    reset_config()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def fast_solver() -> SolverConfig:
    """Tight enough for 1e-5-bit comparisons on small ensembles."""
    return SolverConfig(tol=1e-12, max_iter=3000, restarts=2)


@pytest.fixture
def qubit_basis():
    return basis_encoding(2, 2)
