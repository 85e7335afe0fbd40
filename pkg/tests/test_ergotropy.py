import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, random_hermitian
from heatcount.engine import HeatCountingModel, plus_state, tls_hamiltonian
from heatcount.ergotropy import ergotropy, ergotropy_double_sum, ergotropy_series, passive_state
from heatcount.errors import InvalidDimensionError
from heatcount.model import ModelParams, RCParams

H_TLS = tls_hamiltonian(ModelParams())
EXCITED = np.diag([1.0, 0.0]).astype(complex)
GROUND = np.diag([0.0, 1.0]).astype(complex)


def gibbs(h, beta):
    w, V = np.linalg.eigh(h)
    p = np.exp(-beta * (w - w.min()))
    return (V * (p / p.sum())) @ V.conj().T


def test_two_level_examples():
    assert ergotropy(plus_state(), H_TLS) == pytest.approx(1.0, abs=1e-12)
    assert ergotropy(EXCITED, H_TLS) == pytest.approx(2.0, abs=1e-12)
    np.testing.assert_allclose(passive_state(EXCITED, H_TLS), GROUND, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(d=st.integers(2, 12), beta=st.floats(0.01, 50.0), seed=st.integers(0, 2**32 - 1))
def test_gibbs_states_are_passive(d, beta, seed):
    h = random_hermitian(np.random.default_rng(seed), d)
    rho = gibbs(h, beta)
    assert abs(ergotropy(rho, h)) < 1e-10
    np.testing.assert_allclose(passive_state(rho, h), rho, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(d=st.integers(1, 40), seed=st.integers(0, 2**32 - 1))
def test_passive_and_double_sum_forms_agree(d, seed):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, d)
    h = random_hermitian(rng, d)
    e = ergotropy(rho, h)
    assert e >= -1e-9
    assert e == pytest.approx(ergotropy_double_sum(rho, h), abs=1e-10)
    sigma = passive_state(rho, h)
    # unitary orbit: same spectrum
    np.testing.assert_allclose(np.linalg.eigvalsh(sigma), np.linalg.eigvalsh(rho), atol=1e-10)


def test_degenerate_levels_and_populations():
    h = np.diag([0.0, 1.0, 1.0, 2.0]).astype(complex)
    rho = np.diag([0.1, 0.3, 0.3, 0.3]).astype(complex)
    e = ergotropy(rho, h)
    # ties in either spectrum do not change the value
    assert e == pytest.approx(np.trace(h @ rho).real - (0.3 * 0 + 0.3 * 1 + 0.3 * 1 + 0.1 * 2))
    assert e == pytest.approx(ergotropy_double_sum(rho, h), abs=1e-12)


def test_dimension_mismatch():
    with pytest.raises(InvalidDimensionError):
        ergotropy(np.eye(2) / 2, np.eye(3))


def test_series_initial_values():
    m = HeatCountingModel(ModelParams(m_rc=8))
    rep = ergotropy_series(m, [0.0, 1.0, 2.0])
    assert rep.tls_ergotropy[0] == pytest.approx(1.0, abs=1e-10)
    assert rep.es_ergotropy[0] > rep.tls_ergotropy[0]
    assert np.all(rep.tls_ergotropy >= -1e-9) and np.all(rep.es_ergotropy >= -1e-9)
    assert rep.metadata["params"]["m_rc"] == 8


def test_decoupled_rc_adds_nothing():
    p = ModelParams(m_rc=8)
    rc = RCParams(omega_rc=p.omega0, lambda_rc=0.0, gamma_rc=0.003)
    rep = ergotropy_series(HeatCountingModel(p, rc), [0.0])
    assert rep.es_ergotropy[0] == pytest.approx(rep.tls_ergotropy[0], abs=1e-10)
