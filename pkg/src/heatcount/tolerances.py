"""Numerical tolerances shared by every module."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-10
    state_trace: float = 1e-10
    # |lambda_m - lambda_n| below this (eV) counts as a degenerate pair
    gap_zero: float = 1e-9
    propagation_rel: float = 1e-8
    # eigenvector condition number above which the spectral fast path is refused
    max_eigvec_condition: float = 1e6
    # largest single propagation step (ps)
    max_step_ps: float = 1.0
    reorganization_rel: float = 1e-3


TOL = Tolerances()
