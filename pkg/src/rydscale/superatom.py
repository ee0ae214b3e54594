"""Superatom estimates with unit prefactors.

Balancing the blockade shift against the collective drive, xi^-p = sqrt(N_b) alpha
with N_b = xi^d (lengths in units of a), gives xi = alpha^(-2/(2p+d)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .params import ParameterError, _check_dims


@dataclass(frozen=True)
class SuperatomEstimate:
    xi: float
    N_b: float
    collective_rabi: float
    g_R: float

    @property
    def f_sat(self) -> float:
        return 1.0 / self.N_b

    @property
    def time_scale(self) -> float:
        """Characteristic time 1 / (sqrt(N_b) alpha)."""
        return 1.0 / self.collective_rabi


def blockade_radius(alpha: float, d: int = 3, p: int = 6) -> float:
    _check_dims(d, p)
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    return alpha ** (-2.0 / (2 * p + d))


def superatom_estimate(alpha: float, d: int = 3, p: int = 6) -> SuperatomEstimate:
    xi = blockade_radius(alpha, d, p)
    n_b = xi**d
    return SuperatomEstimate(
        xi=xi,
        N_b=n_b,
        collective_rabi=math.sqrt(n_b) * alpha,
        g_R=alpha / math.sqrt(n_b),
    )
