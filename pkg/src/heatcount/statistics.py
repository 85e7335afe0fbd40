"""Characteristic-function scans, finite-difference moments, distributions."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from heatcount import ibm
from heatcount.engine import CountingVariant, HeatCountingModel

log = logging.getLogger(__name__)

EXACT = "exact"
DEFAULT_CHI_EPS = 0.005


def _check_step(chi_eps):
    chi_eps = np.asarray(chi_eps, dtype=float)
    if not np.all(chi_eps > 0):
        raise ValueError("chi_eps must be positive")
    return chi_eps


def fd_mean(phi_eps, chi_eps):
    """First moment from one CF sample: ``Im(phi)/chi_eps``, error O(chi_eps)."""
    chi_eps = _check_step(chi_eps)
    return np.imag(phi_eps) / chi_eps


def fd_variance(phi_eps, mean, chi_eps):
    """Variance from one CF sample: ``(2 - 2 Re phi)/chi_eps^2 - mean^2``, error O(chi_eps^2)."""
    chi_eps = _check_step(chi_eps)
    return (2.0 - 2.0 * np.real(phi_eps)) / chi_eps**2 - np.asarray(mean) ** 2


@dataclass
class CFSeries:
    variant: str
    chi_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray  # indexed [chi, t]
    failures: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return not self.failures


@dataclass
class MomentSeries:
    t_grid: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    chi_eps: float | None
    method: str


def resolve_threads(threads=None) -> int:
    """Explicit value, then ``HEATCOUNT_THREADS``, then the core count."""
    if threads in (None, "auto"):
        threads = os.environ.get("HEATCOUNT_THREADS") or os.cpu_count() or 1
    return max(1, int(threads))


def _variant_name(variant) -> str:
    return EXACT if variant == EXACT else CountingVariant(variant).value


def cf_scan(variant, chi_grid, t_list, model: HeatCountingModel, threads=None) -> CFSeries:
    """Characteristic function on a ``(chi, t)`` grid.

    ``variant`` is a :class:`CountingVariant` or ``"exact"`` (independent boson
    model, delta = 0 only). Each chi is one propagation; grid points that fail
    are reported in ``failures`` and left as NaN.
    """
    chi_grid = np.atleast_1d(np.asarray(chi_grid, dtype=float))
    t_list = np.atleast_1d(np.asarray(t_list, dtype=float))
    if chi_grid.size == 0 or t_list.size == 0:
        raise ValueError("chi and t grids must be non-empty")
    name = _variant_name(variant)
    if name == EXACT:
        values = ibm.exact_cf(chi_grid[:, None], t_list[None, :], model.params)
        return CFSeries(name, chi_grid, t_list, np.asarray(values))

    def one(chi):
        return model.cf(name, chi, t_list)

    values = np.full((chi_grid.size, t_list.size), np.nan + 0j)
    failures = {}
    n = resolve_threads(threads)
    if n == 1:
        results = [_guard(one, c) for c in chi_grid]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(lambda c: _guard(one, c), chi_grid))
    for k, (chi, (ok, res)) in enumerate(zip(chi_grid, results)):
        if ok:
            values[k] = res
        else:
            failures[float(chi)] = res
            log.error("CF propagation failed at chi=%g: %s", chi, res)
    return CFSeries(name, chi_grid, t_list, values, failures)


def _guard(fn, arg):
    try:
        return True, fn(arg)
    except Exception as exc:  # reported per grid point
        return False, f"{type(exc).__name__}: {exc}"


def moment_series(variant, t_grid, chi_eps, model: HeatCountingModel) -> MomentSeries:
    """Mean and variance of heat from a single propagation at ``chi_eps``.

    For ``"exact"`` the closed-form integrals are returned instead.
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    name = _variant_name(variant)
    if name == EXACT:
        return MomentSeries(
            t_grid,
            np.atleast_1d(ibm.exact_mean(t_grid, model.params)),
            np.atleast_1d(ibm.exact_variance(t_grid, model.params)),
            None,
            "analytic",
        )
    if not chi_eps > 0:
        raise ValueError("chi_eps must be positive")
    phi = model.cf(name, chi_eps, t_grid)
    mean = fd_mean(phi, chi_eps)
    var = fd_variance(phi, mean, chi_eps)
    if np.any(var < -1e-9):
        k = int(np.argmin(var))
        log.warning("%s variance is negative (%.3e eV^2 at t = %g ps); the generator is not "
                    "completely positive at short times", name, var[k], t_grid[k])
    return MomentSeries(t_grid, mean, var, chi_eps, "finite-difference")


def gaussian_window(chi_grid, width=None):
    """Gaussian taper whose full width at half maximum is ``width``
    (default: half the chi range)."""
    chi_grid = np.asarray(chi_grid, dtype=float)
    if width is None:
        width = 0.5 * (chi_grid[-1] - chi_grid[0])
    sigma = width / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    return np.exp(-0.5 * (chi_grid / sigma) ** 2), sigma


def distribution_from_cf(series: CFSeries, t_index: int, q_grid, width=None):
    """Windowed inverse Fourier transform of one CF column.

    Returns ``(P, info)`` where ``P`` is normalised so ``sum(P) * dq = 1`` and
    ``info`` records the window and the discarded imaginary residue.
    """
    chi = np.asarray(series.chi_grid, dtype=float)
    q_grid = np.asarray(q_grid, dtype=float)
    if chi.size < 3:
        raise ValueError("need at least three chi points")
    dchi = np.diff(chi)
    if not np.allclose(dchi, dchi[0], rtol=1e-9, atol=0):
        raise ValueError("chi grid must be uniform")
    if not np.allclose(chi, -chi[::-1], rtol=0, atol=1e-9 * max(1.0, abs(chi[0]))):
        raise ValueError("chi grid must be symmetric about zero")
    dq = np.diff(q_grid)
    if q_grid.size < 2 or not np.allclose(dq, dq[0], rtol=1e-9, atol=0):
        raise ValueError("q grid must be uniform")

    window, sigma = gaussian_window(chi, width)
    phi = np.asarray(series.values)[:, t_index]
    kernel = np.exp(-1j * np.outer(q_grid, chi))
    raw = kernel @ (window * phi) * dchi[0] / (2.0 * np.pi)
    peak = np.max(np.abs(raw))
    residue = float(np.max(np.abs(raw.imag)) / peak) if peak > 0 else 0.0
    P = raw.real
    P = P / (P.sum() * dq[0])
    info = {"window": "gaussian", "fwhm": float(width if width is not None else 0.5 * (chi[-1] - chi[0])),
            "sigma": float(sigma), "imag_residue": residue}
    return P, info
