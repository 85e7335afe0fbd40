"""Heat-counting reaction coordinate master equation.

The extended system (TLS + reaction coordinate) is treated exactly; the
residual Ohmic environment enters through four chi-dressed rate operators
built in the eigenbasis of the extended-system Hamiltonian. Principal-value
(Lamb shift) contributions and the counter term are left out.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from heatcount.errors import ContractViolationError, InvalidDimensionError
from heatcount.linalg import (
    SpectralDecomposition,
    boson_annihilation,
    devectorize,
    hermitian_eig,
    is_hermitian,
    coupled_blocks,
    kron,
    left_mult,
    partial_trace_rc,
    propagate_blocks,
    right_mult,
    sigma_x,
    sigma_z,
    vectorize,
)
from heatcount.model import HBAR, ModelParams, RCParams, bose_occupation, j_rc, map_to_rc
from heatcount.tolerances import TOL

DIM_TLS = 2


class CountingVariant(str, Enum):
    """Which environment Hamiltonian the two-point measurement projects onto."""

    FULL = "full"
    RESIDUAL = "residual"


def plus_state() -> np.ndarray:
    return 0.5 * np.ones((2, 2), dtype=complex)


def tls_hamiltonian(p: ModelParams) -> np.ndarray:
    return 0.5 * p.epsilon * sigma_z() + 0.5 * p.delta * sigma_x()


@dataclass(frozen=True, eq=False)
class ExtendedSystem:
    h_es: np.ndarray
    spectral: SpectralDecomposition
    a_op: np.ndarray
    a_in_eigenbasis: np.ndarray
    h_rc: np.ndarray
    dim_rc: int

    @property
    def dim(self) -> int:
        return DIM_TLS * self.dim_rc

    @property
    def gaps(self) -> np.ndarray:
        """``lambda_m - lambda_n`` indexed ``[m, n]``."""
        lam = self.spectral.eigenvalues
        return lam[:, None] - lam[None, :]


def build_extended_system(p: ModelParams, rc: RCParams) -> ExtendedSystem:
    M = p.m_rc
    a = boson_annihilation(M)
    x = a + a.conj().T
    n = a.conj().T @ a
    i2 = np.eye(DIM_TLS)
    im = np.eye(M)
    h_rc = rc.omega_rc * kron(i2, n)
    h_es = kron(tls_hamiltonian(p), im) + h_rc + rc.lambda_rc * kron(sigma_z(), x)
    spectral = hermitian_eig(h_es)
    a_op = kron(i2, x)
    return ExtendedSystem(
        h_es=h_es,
        spectral=spectral,
        a_op=a_op,
        a_in_eigenbasis=spectral.to_eigenbasis(a_op),
        h_rc=h_rc,
        dim_rc=M,
    )


class RateOperators(NamedTuple):
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    a4: np.ndarray


def transition_rates(es: ExtendedSystem, p: ModelParams, rc: RCParams):
    """Rates per eigen-pair ``(m, n)`` before the coupling matrix elements.

    Returns ``(r1, r4)``: the entries of A1 and A4 divided by ``A_mn``.
    ``r1`` is ``pi J N`` for upward gaps and ``pi J (1+N)`` for downward gaps,
    ``r4`` the reverse; degenerate pairs take the ``omega -> 0`` limit
    ``pi gamma / beta`` in both.
    """
    gaps = es.gaps
    beta = p.beta
    zero = np.abs(gaps) < TOL.gap_zero
    g = np.where(zero, 1.0, np.abs(gaps))
    spec = j_rc(g, rc, p)
    occ = bose_occupation(g, beta)
    absorb = np.pi * spec * occ
    emit = np.pi * spec * (1.0 + occ)
    flat = np.pi * rc.gamma_rc / beta
    r1 = np.where(zero, flat, np.where(gaps > 0, absorb, emit))
    r4 = np.where(zero, flat, np.where(gaps > 0, emit, absorb))
    return r1, r4


def rate_operators(es: ExtendedSystem, chi: float, p: ModelParams, rc: RCParams,
                   basis: str = "computational") -> RateOperators:
    """The four rate operators, in the computational basis by default.

    Only A2 and A3 depend on the counting field, through ``exp(+-i chi lambda_mn)``.
    """
    r1, r4 = transition_rates(es, p, rc)
    gaps = es.gaps
    phase = np.where(np.abs(gaps) < TOL.gap_zero, 1.0, np.exp(1j * chi * gaps))
    A = es.a_in_eigenbasis
    eig_ops = (A * r1, A * r4 * phase, A * r1 * phase.conj(), A * r4)
    if basis == "eigen":
        return RateOperators(*eig_ops)
    return RateOperators(*(es.spectral.from_eigenbasis(op) for op in eig_ops))


def build_liouvillian(es: ExtendedSystem, chi: float, p: ModelParams, rc: RCParams,
                      rates: RateOperators | None = None) -> np.ndarray:
    """Generator in ps^-1 acting on column-stacked states.

    ``d rho/dt = -i/hbar [H, rho] - 1/hbar (A A1 rho - A rho A2 - A3 rho A + rho A4 A)``
    """
    if rates is None:
        rates = rate_operators(es, chi, p, rc)
    A = es.a_op
    H = es.h_es
    L = -1j * (left_mult(H) - right_mult(H))
    L -= left_mult(A @ rates.a1)
    # left_mult(X) @ right_mult(Y) == kron(Y^T, X)
    L += kron(rates.a2.T, A)
    L += kron(A.T, rates.a3)
    L -= right_mult(rates.a4 @ A)
    return L / HBAR


def liouvillian_blocks(es: ExtendedSystem, chi: float, p: ModelParams, rc: RCParams,
                       rates: RateOperators | None = None):
    """The generator as exactly decoupled ``(vec indices, block)`` pairs.

    When ``H``, ``A`` and the rate operators share a block-diagonal structure
    with Hilbert-space blocks ``B_i``, each coherence block ``rho[B_i, B_j]``
    evolves on its own. Building these directly avoids the full ``d^2 x d^2``
    matrix; assembled back they equal :func:`build_liouvillian` exactly.
    """
    if rates is None:
        rates = rate_operators(es, chi, p, rc)
    A = es.a_op
    H = es.h_es
    left_ops = [H, A, A @ rates.a1, rates.a3]
    right_ops = [H, A, rates.a2, rates.a4 @ A]
    pattern = sum(np.abs(op) for op in left_ops + right_ops)
    hblocks = coupled_blocks(pattern)
    d = es.dim
    out = []
    for bi in hblocks:
        ii = np.ix_(bi, bi)
        ei = np.eye(len(bi))
        for bj in hblocks:
            jj = np.ix_(bj, bj)
            ej = np.eye(len(bj))
            Lb = -1j * (kron(ej, H[ii]) - kron(H[jj].T, ei))
            Lb -= kron(ej, (A @ rates.a1)[ii])
            Lb += kron(rates.a2[jj].T, A[ii])
            Lb += kron(A[jj].T, rates.a3[ii])
            Lb -= kron((rates.a4 @ A)[jj].T, ei)
            idx = (bj[:, None] * d + bi[None, :]).reshape(-1)
            out.append((idx, Lb / HBAR))
    return out


@dataclass(frozen=True, eq=False)
class GeneralizedState:
    chi: float
    variant: CountingVariant
    t: float
    vec: np.ndarray

    def matrix(self) -> np.ndarray:
        return devectorize(self.vec)


def _check_tls_state(rho_s0):
    rho_s0 = np.asarray(rho_s0, dtype=complex)
    if rho_s0.shape != (2, 2):
        raise InvalidDimensionError(f"TLS state must be 2x2, got {rho_s0.shape}")
    if abs(np.trace(rho_s0) - 1.0) > TOL.state_trace:
        raise ContractViolationError(f"TLS state has trace {np.trace(rho_s0)}")
    if np.linalg.norm(rho_s0 - rho_s0.conj().T) > TOL.hermiticity:
        raise ContractViolationError("TLS state is not Hermitian")
    return rho_s0


def rc_thermal_weights(p: ModelParams, rc: RCParams) -> np.ndarray:
    w = np.exp(-p.beta * rc.omega_rc * np.arange(p.m_rc))
    return w / w.sum()


def initial_state(variant: CountingVariant, chi: float, rho_s0, p: ModelParams,
                  rc: RCParams) -> GeneralizedState:
    """``rho_S(0)`` times the RC Gibbs state; the full-environment variant also
    carries ``exp(-i chi Omega a^dag a)`` from the first measurement."""
    variant = CountingVariant(variant)
    rho_s0 = _check_tls_state(rho_s0)
    weights = rc_thermal_weights(p, rc).astype(complex)
    if variant is CountingVariant.FULL:
        weights = weights * np.exp(-1j * chi * rc.omega_rc * np.arange(p.m_rc))
    rho = kron(rho_s0, np.diag(weights))
    return GeneralizedState(chi=float(chi), variant=variant, t=0.0, vec=vectorize(rho))


def readout_weights(variant: CountingVariant, chi: float, es: ExtendedSystem) -> np.ndarray:
    """Row vector ``w`` with ``w @ vec(rho)`` equal to the CF readout."""
    d = es.dim
    diag = np.ones(d, dtype=complex)
    if CountingVariant(variant) is CountingVariant.FULL:
        diag = np.exp(1j * chi * np.real(np.diag(es.h_rc)))
    w = np.zeros(d * d, dtype=complex)
    w[np.arange(d) * (d + 1)] = diag
    return w


def cf_readout(state: GeneralizedState, es: ExtendedSystem) -> complex:
    return complex(readout_weights(state.variant, state.chi, es) @ state.vec)


class Dynamics(NamedTuple):
    times: np.ndarray
    rho_s: np.ndarray
    sx: np.ndarray
    rho_es: np.ndarray


class HeatCountingModel:
    """Extended system plus cached rate operators for one parameter set.

    Instances hold no mutable state apart from a thread-safe rate cache, so
    propagations at different ``chi`` may run concurrently.
    """

    def __init__(self, params: ModelParams | None = None, rc: RCParams | None = None,
                 rho_s0=None):
        self.params = params if params is not None else ModelParams()
        self.rc = rc if rc is not None else map_to_rc(self.params)
        self.rho_s0 = _check_tls_state(plus_state() if rho_s0 is None else rho_s0)
        self.system = build_extended_system(self.params, self.rc)
        self._rates: dict[float, RateOperators] = {}
        self._lock = threading.Lock()

    def rates(self, chi: float) -> RateOperators:
        chi = float(chi)
        with self._lock:
            cached = self._rates.get(chi)
        if cached is None:
            cached = rate_operators(self.system, chi, self.params, self.rc)
            with self._lock:
                self._rates[chi] = cached
        return cached

    def liouvillian(self, chi: float) -> np.ndarray:
        return build_liouvillian(self.system, chi, self.params, self.rc, rates=self.rates(chi))

    def liouvillian_blocks(self, chi: float):
        return liouvillian_blocks(self.system, chi, self.params, self.rc, rates=self.rates(chi))

    def initial_state(self, variant, chi: float) -> GeneralizedState:
        return initial_state(variant, chi, self.rho_s0, self.params, self.rc)

    def _flow(self, chi, v0, times):
        return propagate_blocks(self.liouvillian_blocks(chi), v0, times)

    def evolve(self, variant, chi: float, times) -> list[GeneralizedState]:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        start = self.initial_state(variant, chi)
        vecs = self._flow(chi, start.vec, times)
        return [GeneralizedState(start.chi, start.variant, float(t), v) for t, v in zip(times, vecs)]

    def cf(self, variant, chi: float, times) -> np.ndarray:
        """Characteristic function at one counting field for every requested time."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        start = self.initial_state(variant, chi)
        vecs = self._flow(chi, start.vec, times)
        return vecs @ readout_weights(start.variant, chi, self.system)

    def dynamics_chi0(self, times) -> Dynamics:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        start = self.initial_state(CountingVariant.RESIDUAL, 0.0)
        vecs = self._flow(0.0, start.vec, times)
        d = self.system.dim
        rho_es = vecs.reshape(len(times), d, d).transpose(0, 2, 1)
        rho_s = np.array([partial_trace_rc(r, DIM_TLS, self.system.dim_rc) for r in rho_es])
        sx = np.real(rho_s[:, 0, 1] + rho_s[:, 1, 0])
        return Dynamics(times, rho_s, sx, rho_es)


def cf_value(variant, chi: float, t, model: HeatCountingModel):
    res = model.cf(variant, chi, t)
    return res[0] if np.ndim(t) == 0 else res


def dynamics_chi0(p: ModelParams, rc: RCParams, rho_s0, times) -> Dynamics:
    return HeatCountingModel(p, rc, rho_s0).dynamics_chi0(times)


def is_physical_state(rho, tol: float = 1e-8) -> bool:
    return is_hermitian(rho, tol) and abs(np.trace(rho) - 1) < tol
