"""Adaptive quadrature for peaked, oscillating spectral integrals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

from heatcount.errors import QuadratureError


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 20_000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 100:
            raise ValueError("max_subdivisions must be at least 100")


DEFAULT_QUADRATURE = QuadratureSpec()

# more initial panels than this only slows the adaptive driver down
_MAX_PERIOD_PANELS = 4000


def integrate_oscillatory(f, upper, spec: QuadratureSpec = DEFAULT_QUADRATURE, *,
                          lower=0.0, points=(), period=None):
    """Integrate ``f`` over ``(lower, upper]`` by adaptive Gauss-Kronrod subdivision.

    ``f`` may return a scalar or an array (for example one value per time
    point); the error control then applies to the whole vector. ``points``
    seeds breakpoints such as the spectral peak, and ``period`` (the shortest
    oscillation period of the integrand in the integration variable) adds a
    breakpoint every period so that no oscillation is skipped by the initial
    coarse rule. Endpoints are never evaluated, so a removable singularity at
    ``lower`` is harmless.
    """
    breaks = [p for p in points if lower < p < upper]
    if period is not None and period > 0:
        n = int((upper - lower) / period)
        if n > _MAX_PERIOD_PANELS:
            n = _MAX_PERIOD_PANELS
        if n > 1:
            breaks.extend(np.linspace(lower, upper, n + 1)[1:-1])
    breaks = sorted(set(breaks)) or None

    res, err, info = quad_vec(
        f,
        lower,
        upper,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=spec.max_subdivisions,
        points=breaks,
        full_output=True,
    )
    if info.status != 0:
        raise QuadratureError(
            f"quadrature did not converge (status {info.status}, "
            f"{info.intervals.shape[0]} intervals, error estimate {err:.3e})",
            estimate=res,
            error=err,
        )
    return res
