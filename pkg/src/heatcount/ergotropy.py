"""Ergotropy of the TLS and of the extended system."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from heatcount.engine import HeatCountingModel, tls_hamiltonian
from heatcount.errors import InvalidDimensionError
from heatcount.linalg import hermitian_eig


def _check_pair(rho, h):
    rho = np.asarray(rho, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if rho.shape != h.shape or rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidDimensionError(f"state {rho.shape} and Hamiltonian {h.shape} differ")
    return rho, h


def _sorted_spectra(rho, h):
    # populations descending, energies ascending; stable sorts make ties canonical
    r, R = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    order = np.argsort(-r, kind="stable")
    spec = hermitian_eig(h)
    return r[order], R[:, order], spec.eigenvalues, spec.eigenvectors


def passive_state(rho, h) -> np.ndarray:
    """Minimum-energy unitary orbit point: largest population on the lowest level."""
    rho, h = _check_pair(rho, h)
    r, _, _, E = _sorted_spectra(rho, h)
    return (E * r) @ E.conj().T


def ergotropy(rho, h) -> float:
    rho, h = _check_pair(rho, h)
    r, _, eps, _ = _sorted_spectra(rho, h)
    energy = np.real(np.trace(h @ rho))
    return float(energy - np.dot(r, eps))


def ergotropy_double_sum(rho, h) -> float:
    """``sum_jk r_j e_k (|<r_j|e_k>|^2 - delta_jk)`` with both spectra ordered."""
    rho, h = _check_pair(rho, h)
    r, R, eps, E = _sorted_spectra(rho, h)
    overlap = np.abs(R.conj().T @ E) ** 2
    return float(np.sum(r[:, None] * eps[None, :] * (overlap - np.eye(len(r)))))


@dataclass
class ErgotropyReport:
    t_grid: np.ndarray
    tls_ergotropy: np.ndarray
    es_ergotropy: np.ndarray
    sx: np.ndarray
    # 2|rho_eg|: the envelope of <sigma_x> (its carrier is the TLS splitting)
    coherence_amplitude: np.ndarray
    metadata: dict = field(default_factory=dict)


def ergotropy_series(model: HeatCountingModel, t_grid) -> ErgotropyReport:
    """TLS ergotropy w.r.t. the bare TLS Hamiltonian and ES ergotropy w.r.t. H_ES."""
    dyn = model.dynamics_chi0(t_grid)
    h_s = tls_hamiltonian(model.params)
    h_es = model.system.h_es
    tls = np.array([ergotropy(r, h_s) for r in dyn.rho_s])
    es = np.array([ergotropy(r, h_es) for r in dyn.rho_es])
    meta = {"params": model.params.to_dict(), "rc": model.rc.to_dict()}
    amp = 2.0 * np.abs(dyn.rho_s[:, 0, 1])
    return ErgotropyReport(dyn.times, tls, es, dyn.sx, amp, meta)
