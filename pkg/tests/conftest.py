import numpy as np
import pytest

from heatcount import HeatCountingModel, ModelParams


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def model(params):
    return HeatCountingModel(params)


@pytest.fixture(scope="session")
def small_model():
    # cheap extended system for structural checks
    return HeatCountingModel(ModelParams(m_rc=6))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_density(rng, d):
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = X @ X.conj().T
    return rho / np.trace(rho)


def random_hermitian(rng, d):
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (X + X.conj().T)
