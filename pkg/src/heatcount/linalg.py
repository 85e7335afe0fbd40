"""Dense linear algebra on truncated Hilbert spaces.

Operators are plain complex ``numpy`` arrays. Superoperators act on
column-stacked vectors, so that ``vec(A X B) = (B^T kron A) vec(X)``.
"""

from __future__ import annotations

import math
import warnings
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from heatcount.errors import (
    ContractViolationError,
    InvalidDimensionError,
    PropagationWarning,
)
from heatcount.tolerances import TOL


def sigma_x():
    return np.array([[0, 1], [1, 0]], dtype=complex)


def sigma_y():
    return np.array([[0, -1j], [1j, 0]], dtype=complex)


def sigma_z():
    # basis order (|e>, |g>)
    return np.array([[1, 0], [0, -1]], dtype=complex)


def boson_annihilation(M: int) -> np.ndarray:
    """Truncated annihilation operator, ``<n-1|a|n> = sqrt(n)``."""
    if int(M) != M or M < 2:
        raise InvalidDimensionError(f"Fock truncation must be an integer >= 2, got {M!r}")
    return np.diag(np.sqrt(np.arange(1, M)), k=1).astype(complex)


def kron(A, B) -> np.ndarray:
    return np.kron(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex))


def relative_hermiticity_error(H) -> float:
    H = np.asarray(H)
    scale = np.linalg.norm(H)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(H - H.conj().T) / scale)


def is_hermitian(H, tol: float = TOL.hermiticity) -> bool:
    return relative_hermiticity_error(H) <= tol


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T

    def to_eigenbasis(self, op) -> np.ndarray:
        V = self.eigenvectors
        return V.conj().T @ op @ V

    def from_eigenbasis(self, op) -> np.ndarray:
        V = self.eigenvectors
        return V @ op @ V.conj().T


def coupled_blocks(M) -> list[np.ndarray]:
    """Index sets of the invariant blocks of ``M`` (exact-zero coupling pattern).

    Each returned index array is sorted; the blocks partition ``range(n)``.
    """
    M = np.asarray(M)
    pattern = csr_matrix((M != 0) | (M.T != 0))
    n_comp, labels = connected_components(pattern, directed=False)
    return [np.flatnonzero(labels == c) for c in range(n_comp)]


def hermitian_eig(H) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix with ascending eigenvalues.

    Blocks that are exactly decoupled in ``H`` are diagonalised separately so
    the eigenvectors carry the same exact zero structure.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got shape {H.shape}")
    if not is_hermitian(H):
        raise ContractViolationError(
            f"matrix is not Hermitian (relative error {relative_hermiticity_error(H):.3e})"
        )
    n = H.shape[0]
    values = np.empty(n)
    vectors = np.zeros((n, n), dtype=complex)
    col = 0
    for idx in coupled_blocks(H):
        w, v = np.linalg.eigh(H[np.ix_(idx, idx)])
        k = len(idx)
        values[col : col + k] = w
        vectors[idx, col : col + k] = v
        col += k
    order = np.argsort(values, kind="stable")
    return SpectralDecomposition(values[order], vectors[:, order])


def vectorize(rho) -> np.ndarray:
    """Column-stacking vectorisation."""
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def devectorize(vec) -> np.ndarray:
    vec = np.asarray(vec)
    d = math.isqrt(vec.size)
    if d * d != vec.size:
        raise InvalidDimensionError(f"vector length {vec.size} is not a perfect square")
    return vec.reshape((d, d), order="F")


def left_mult(A) -> np.ndarray:
    """Superoperator of ``X -> A X``."""
    A = np.asarray(A, dtype=complex)
    return np.kron(np.eye(A.shape[0], dtype=complex), A)


def right_mult(B) -> np.ndarray:
    """Superoperator of ``X -> X B``."""
    B = np.asarray(B, dtype=complex)
    return np.kron(B.T, np.eye(B.shape[0], dtype=complex))


def partial_trace_rc(rho_es, dim_tls: int, dim_rc: int) -> np.ndarray:
    """Trace out the second tensor factor (the reaction coordinate)."""
    rho_es = np.asarray(rho_es)
    if rho_es.shape != (dim_tls * dim_rc, dim_tls * dim_rc):
        raise InvalidDimensionError(
            f"state of shape {rho_es.shape} does not match {dim_tls}x{dim_rc} factors"
        )
    return np.einsum("injn->ij", rho_es.reshape(dim_tls, dim_rc, dim_tls, dim_rc))


def _step_plan(times, max_step):
    """Per requested time: (step length, number of sub-steps) from the previous one."""
    increments = np.diff(np.concatenate(([0.0], times)))
    plan = []
    for inc in increments:
        if inc == 0.0:
            plan.append((0.0, 0))
            continue
        nsub = max(1, math.ceil(inc / max_step - 1e-9))
        plan.append((inc / nsub, nsub))
    return plan


def _uniform_spacing(times):
    if len(times) < 3:
        return None
    d = np.diff(times)
    h = (times[-1] - times[0]) / (len(times) - 1)
    if np.all(np.abs(d - h) <= 1e-9 * max(h, 1e-300)):
        return h
    return None


def _propagate_block_expm(L, v0, times, max_step):
    n_out = len(times)
    out = np.empty((n_out, len(v0)), dtype=complex)
    cache: dict[float, np.ndarray] = {}

    def propagator(h):
        for key, P in cache.items():
            if abs(key - h) <= 1e-12 * max(1.0, h):
                return P
        P = scipy.linalg.expm(L * h)
        cache[h] = P
        return P

    h_uniform = _uniform_spacing(times)
    plan = _step_plan(times, max_step)
    if h_uniform is not None:
        # equal increments after the first: snap to the exact mean spacing
        nsub = plan[1][1]
        h = h_uniform / nsub
        plan = plan[:1] + [(h, nsub)] * (n_out - 1)

    v = v0.copy()
    for k, (h, nsub) in enumerate(plan):
        if nsub:
            P = propagator(h)
            for _ in range(nsub):
                v = P @ v
        out[k] = v
    return out


def _propagate_block_spectral(L, v0, times):
    w, V = np.linalg.eig(L)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond >= TOL.max_eigvec_condition:
        return None, cond
    c = np.linalg.solve(V, v0)
    return (np.exp(np.outer(times, w)) * c) @ V.T, cond


def split_generator(L) -> list[tuple[np.ndarray, np.ndarray]]:
    """Exactly decoupled diagonal blocks ``(indices, L[indices, indices])`` of ``L``."""
    L = np.asarray(L, dtype=complex)
    return [(idx, L[np.ix_(idx, idx)]) for idx in coupled_blocks(L)]


def _check_times(times):
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size == 0:
        raise ValueError("no output times requested")
    if times[0] < 0 or np.any(np.diff(times) < 0):
        raise ValueError("times must be non-negative and ascending")
    return times


def propagate_blocks(blocks, v0, times, method: str = "expm",
                     max_step: float = TOL.max_step_ps) -> np.ndarray:
    """:func:`propagate` for a generator given as decoupled ``(indices, block)`` pairs."""
    v0 = np.asarray(v0, dtype=complex)
    times = _check_times(times)
    if method not in ("expm", "spectral"):
        raise ValueError(f"unknown propagation method {method!r}")
    out = np.zeros((times.size, v0.size), dtype=complex)
    for idx, Lb in blocks:
        if not np.all(np.isfinite(Lb)):
            raise ValueError("generator contains non-finite entries")
        if not np.any(v0[idx]):
            continue  # invariant block starting at zero stays zero
        res = None
        if method == "spectral":
            res, cond = _propagate_block_spectral(Lb, v0[idx], times)
            if res is None:
                warnings.warn(
                    f"eigenvector condition number {cond:.2e} too large for the spectral "
                    "path; falling back to expm stepping",
                    PropagationWarning,
                    stacklevel=3,
                )
        if res is None:
            res = _propagate_block_expm(Lb, v0[idx], times, max_step)
        out[:, idx] = res
    if not np.all(np.isfinite(out)):
        warnings.warn("propagation produced non-finite values", PropagationWarning, stacklevel=3)
    return out


def propagate(L, v0, times, method: str = "expm", max_step: float = TOL.max_step_ps) -> np.ndarray:
    """Exact flow ``exp(L t_k) v0`` of a constant generator.

    Returns an array of shape ``(len(times), len(v0))``. The default method
    precomputes ``exp(L dt)`` by scaling and squaring and applies it
    repeatedly, with ``dt = min(max_step, spacing)``. ``method="spectral"``
    diagonalises ``L`` and falls back to ``expm`` (with a
    :class:`PropagationWarning`) when the eigenvectors are badly conditioned.

    Exactly decoupled blocks of ``L`` are propagated independently.
    """
    L = np.asarray(L, dtype=complex)
    v0 = np.asarray(v0, dtype=complex)
    if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] != v0.size:
        raise InvalidDimensionError(f"generator {L.shape} incompatible with vector {v0.shape}")
    if not np.all(np.isfinite(L)):
        raise ValueError("generator contains non-finite entries")
    return propagate_blocks(split_generator(L), v0, times, method, max_step)
