"""
Common test fixtures and configuration for pytest.
"""

import os

import numpy as np
import pytest

from hop_sim.schemas import ModelSpec, MonteCarloParams, SdeConfig
from hop_sim.services.ensemble_service import EnsembleService
from hop_sim.services.verify_service import VerificationService
from hop_sim.settings import Settings
from hop_sim.types import INFINITY


@pytest.fixture
def settings(monkeypatch):
    """Settings isolated from the caller's HOP_SIM_* environment."""
    for key in list(os.environ):
        if key.startswith("HOP_SIM_"):
            monkeypatch.delenv(key)
    return Settings()


@pytest.fixture
def compact_model():
    """compactA, N=3, k=1."""
    return ModelSpec.compact_a(3, 1.0)


@pytest.fixture
def noncompact_model():
    """noncompactA, N=2, k=1."""
    return ModelSpec.noncompact_a(2, 1.0)


@pytest.fixture
def bc_model():
    """noncompactBC, N=2, p=q=2, κ=1."""
    return ModelSpec.noncompact_bc(2, 2.0, 2.0, 1.0)


@pytest.fixture
def frozen_noncompact_model():
    return ModelSpec.noncompact_a(3, INFINITY)


@pytest.fixture
def short_config():
    """Coarse grid for fast path tests."""
    return SdeConfig(dt=1e-3, t_end=0.05, seed=3, block_size=64)


@pytest.fixture
def small_mc():
    """Reduced Monte Carlo size for unit tests."""
    return MonteCarloParams(n_paths=4000, dt=2e-3, seed=5, block_size=512)


@pytest.fixture
def ensemble():
    return EnsembleService(threads=1)


@pytest.fixture
def verification(ensemble, settings):
    return VerificationService(ensemble, settings)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
