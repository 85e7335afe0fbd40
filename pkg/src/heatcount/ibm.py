"""Closed-form results for the independent boson model (Delta = 0).

All functions accept scalars or 1-D arrays. Integrands are evaluated with the
``1 - cos x = 2 sin^2(x/2)`` form so that nothing cancels near ``omega = 0``.
"""

from __future__ import annotations

import numpy as np

from heatcount.errors import UnsupportedRegimeError
from heatcount.model import HBAR, ModelParams, j_underdamped, j_underdamped_over_omega
from heatcount.quadrature import DEFAULT_QUADRATURE, QuadratureSpec, integrate_oscillatory


def _peak_points(p: ModelParams):
    g, w0 = p.gamma_width, p.omega0
    return [w0 - 20 * g, w0 - 3 * g, w0 - g, w0, w0 + g, w0 + 3 * g, w0 + 20 * g]


def _period(*scales):
    """Shortest oscillation period in omega for exponents ``omega * scale``."""
    s = max((float(np.max(np.abs(x))) for x in scales if np.size(x)), default=0.0)
    return 2 * np.pi / s if s > 0 else None


def _one_minus_cos(x):
    return 2.0 * np.sin(0.5 * x) ** 2


def _coth(x):
    return 1.0 / np.tanh(x)


def _integrate(f, p, spec, *scales):
    return integrate_oscillatory(f, p.omega_cut, spec, points=_peak_points(p), period=_period(*scales))


def exact_mean(t, p: ModelParams, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Mean full-environment heat ``2 int J/w (1 - cos(w t/hbar))`` in eV."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    x = np.atleast_1d(t) / HBAR
    res = _integrate(lambda w: 2.0 * j_underdamped_over_omega(w, p) * _one_minus_cos(w * x), p, spec, x)
    return res.reshape(t.shape)[()]


def exact_variance(t, p: ModelParams, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Variance of full-environment heat ``2 int J coth(beta w/2) (1 - cos(w t/hbar))`` in eV^2."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    x = np.atleast_1d(t) / HBAR
    beta = p.beta

    def f(w):
        return 2.0 * j_underdamped(w, p) * _coth(0.5 * beta * w) * _one_minus_cos(w * x)

    res = _integrate(f, p, spec, x)
    return res.reshape(t.shape)[()]


def decoherence_function(t, p: ModelParams, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """``4 int J/w^2 coth(beta w/2) (1 - cos(w t/hbar))`` (dimensionless)."""
    t = np.asarray(t, dtype=float)
    x = np.atleast_1d(t) / HBAR
    beta = p.beta

    def f(w):
        return 4.0 * j_underdamped_over_omega(w, p) * _coth(0.5 * beta * w) * _one_minus_cos(w * x) / w

    res = _integrate(f, p, spec, x)
    return res.reshape(t.shape)[()]


def exact_coherence(t, p: ModelParams, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """``<sigma_x(t)>`` for the TLS prepared in ``|+>``.

    The reorganisation phase is the same on both ``sigma_z`` branches and
    drops out, leaving free precession times the dephasing envelope.
    """
    if p.delta != 0:
        raise UnsupportedRegimeError("exact coherence is only available for delta = 0")
    t = np.asarray(t, dtype=float)
    return np.cos(p.epsilon * t / HBAR) * np.exp(-decoherence_function(t, p, spec))


def exact_cf(chi, t, p: ModelParams, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Characteristic function of full-environment heat.

    ``chi`` (1/eV) and ``t`` (ps) broadcast against each other; the result has
    the broadcast shape.
    """
    chi, t = np.broadcast_arrays(np.asarray(chi, dtype=float), np.asarray(t, dtype=float))
    shape = chi.shape
    c = chi.ravel()
    x = t.ravel() / HBAR
    beta = p.beta

    def f(w):
        thermal = _coth(0.5 * beta * w) * _one_minus_cos(w * c) - 1j * np.sin(w * c)
        return 2.0 * j_underdamped_over_omega(w, p) / w * _one_minus_cos(w * x) * thermal

    exponent = _integrate(f, p, spec, x, c)
    return np.exp(-exponent).reshape(shape)[()]
