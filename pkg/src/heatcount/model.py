"""Physical parameters, spectral densities and the reaction coordinate mapping.

Units: energies and angular frequencies in eV, times in ps, temperature in K.
Time exponents use ``E t / HBAR``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from heatcount.quadrature import QuadratureSpec, integrate_oscillatory
from heatcount.tolerances import TOL


@dataclass(frozen=True)
class UnitSystem:
    hbar: float = 0.6582119569  # eV ps
    k_boltzmann: float = 8.617333262e-5  # eV / K


UNITS = UnitSystem()
HBAR = UNITS.hbar
K_B = UNITS.k_boltzmann


@dataclass(frozen=True)
class ModelParams:
    """Unmapped spin-boson parameters. Defaults are the reference working point of the dephasing benchmark."""

    epsilon: float = 2.0
    delta: float = 0.0
    alpha: float = 0.1
    gamma_width: float = 0.001
    omega0: float = 0.05
    temperature: float = 300.0
    m_rc: int = 20
    omega_cut: float | None = field(default=None)

    def __post_init__(self):
        if self.omega_cut is None:
            object.__setattr__(self, "omega_cut", 10.0 * self.omega0)
        problems = []
        if not self.alpha > 0:
            problems.append("alpha must be > 0")
        if not self.gamma_width > 0:
            problems.append("gamma_width must be > 0")
        if not self.omega0 > 0:
            problems.append("omega0 must be > 0")
        if not self.temperature > 0:
            problems.append("temperature must be > 0")
        if int(self.m_rc) != self.m_rc or self.m_rc < 2:
            problems.append("m_rc must be an integer >= 2")
        if not self.omega_cut > self.omega0:
            problems.append("omega_cut must exceed omega0")
        if problems:
            raise ValueError("invalid ModelParams: " + "; ".join(problems))
        object.__setattr__(self, "m_rc", int(self.m_rc))

    @property
    def beta(self) -> float:
        return beta_from_temperature(self.temperature)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RCParams:
    omega_rc: float
    lambda_rc: float
    gamma_rc: float

    def __post_init__(self):
        for name in ("omega_rc", "gamma_rc"):
            if not getattr(self, name) > 0:
                raise ValueError(f"RCParams.{name} must be strictly positive")
        # lambda = 0 is the decoupled reference case
        if not self.lambda_rc >= 0:
            raise ValueError("RCParams.lambda_rc must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


def _check_nonnegative(omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("spectral densities are defined for omega >= 0 only")
    return omega


def _peak_denominator(omega, p):
    return (p.omega0**2 - omega**2) ** 2 + (p.gamma_width * omega) ** 2


def j_underdamped(omega, p: ModelParams):
    """Underdamped Drude-Lorentz spectral density with a hard cutoff."""
    omega = _check_nonnegative(omega)
    val = p.alpha * p.gamma_width * p.omega0**2 * omega / _peak_denominator(omega, p)
    val = np.where(omega <= p.omega_cut, val, 0.0)
    return val[()] if val.ndim == 0 else val


def j_underdamped_over_omega(omega, p: ModelParams):
    """``J_UD(omega) / omega`` written without the removable 0/0 at the origin."""
    omega = _check_nonnegative(omega)
    val = p.alpha * p.gamma_width * p.omega0**2 / _peak_denominator(omega, p)
    val = np.where(omega <= p.omega_cut, val, 0.0)
    return val[()] if val.ndim == 0 else val


def j_rc(omega, rc: RCParams, p: ModelParams):
    """Ohmic residual-environment spectral density ``gamma * omega`` with cutoff."""
    omega = _check_nonnegative(omega)
    val = np.where(omega <= p.omega_cut, rc.gamma_rc * omega, 0.0)
    return val[()] if val.ndim == 0 else val


def beta_from_temperature(T) -> float:
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    return 1.0 / (K_B * T)


def bose_occupation(omega, beta):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("Bose occupation needs omega > 0; use the omega -> 0 limit forms")
    with np.errstate(over="ignore"):  # deep quantum limit: 1/inf -> 0
        val = 1.0 / np.expm1(beta * omega)
    return val[()] if val.ndim == 0 else val


def reorganization_energy(p: ModelParams, cutoff_override: float | None = None,
                          spec: QuadratureSpec = QuadratureSpec()) -> float:
    """``int_0^cutoff J_UD(w)/w dw``; the cutoff defaults to ``p.omega_cut``."""
    upper = p.omega_cut if cutoff_override is None else cutoff_override
    # integrate the bare Lorentzian so cutoff_override can exceed omega_cut
    g, w0 = p.gamma_width, p.omega0
    f = lambda w: p.alpha * g * w0**2 / ((w0**2 - w**2) ** 2 + (g * w) ** 2)  # noqa: E731
    pts = [w0 - 10 * g, w0 - g, w0, w0 + g, w0 + 10 * g]
    return float(integrate_oscillatory(f, upper, spec, points=pts))


@functools.lru_cache(maxsize=64)
def map_to_rc(p: ModelParams) -> RCParams:
    """Reaction coordinate frequency, TLS-RC coupling and residual Ohmic strength.

    Checked against the reorganisation energy: ``int J_UD/w = lambda^2/Omega``.
    """
    rc = RCParams(
        omega_rc=p.omega0,
        lambda_rc=math.sqrt(math.pi * p.alpha * p.omega0 / 2.0),
        gamma_rc=p.gamma_width / (2.0 * math.pi * p.omega0),
    )
    target = rc.lambda_rc**2 / rc.omega_rc
    reorg = reorganization_energy(p, cutoff_override=200.0 * p.omega0)
    if abs(reorg - target) / target >= TOL.reorganization_rel:
        raise ValueError(
            f"reaction coordinate mapping fails the reorganisation check: "
            f"{reorg:.6g} vs lambda^2/Omega = {target:.6g}"
        )
    return rc
