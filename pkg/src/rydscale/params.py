"""Unit conventions, nondimensionalization and closed-form critical exponents.

Downstream modules work in natural units: hbar = 1, lengths in units of the
mean spacing a = n^(-1/d), energies in units of E_c = C_p n^(p/d).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .constants import C6_ATOMIC_UNIT, HBAR, MICROMETER, PLANCK


class ParameterError(ValueError):
    """Raised for physically invalid parameter combinations."""


def _check_dims(d: int, p: int) -> None:
    if d < 1:
        raise ParameterError(f"dimension must be >= 1, got {d}")
    if p <= d:
        raise ParameterError(f"no critical point for p <= d (p={p}, d={d})")


@dataclass(frozen=True)
class PhysicalParams:
    """Experimental parameters in SI units.

    ``interaction_coefficient`` is |C_p| in J m^p (repulsive convention).
    """

    rabi_frequency: float  # rad/s
    density: float  # m^-d
    interaction_coefficient: float  # J m^p
    dimension: int = 3
    interaction_exponent: int = 6
    laser_detuning: float = 0.0  # rad/s
    atom_number: int = 1

    def __post_init__(self):
        _check_dims(self.dimension, self.interaction_exponent)
        if not self.rabi_frequency >= 0:
            raise ParameterError("rabi_frequency must be >= 0")
        if not self.density > 0:
            raise ParameterError("density must be positive")
        if not self.interaction_coefficient > 0:
            raise ParameterError("interaction_coefficient must be positive")
        if self.atom_number < 1:
            raise ParameterError("atom_number must be >= 1")

    @property
    def characteristic_energy(self) -> float:
        """E_c = C_p n^(p/d) in joules."""
        return characteristic_energy(
            self.interaction_coefficient, self.density, self.dimension, self.interaction_exponent
        )

    @property
    def spacing(self) -> float:
        """Mean interparticle distance a = n^(-1/d) in metres."""
        return self.density ** (-1.0 / self.dimension)


@dataclass(frozen=True)
class ModelParams:
    dimension: int
    interaction_exponent: int
    alpha: float
    delta: float = 0.0

    def __post_init__(self):
        _check_dims(self.dimension, self.interaction_exponent)
        if not self.alpha >= 0:
            raise ParameterError(f"alpha must be >= 0, got {self.alpha}")

    @property
    def d(self) -> int:
        return self.dimension

    @property
    def p(self) -> int:
        return self.interaction_exponent


@dataclass(frozen=True)
class CriticalExponents:
    """Exact exponents as fractions; ``nu`` is derived (xi ~ a f_R^(-1/d), f_R ~ Delta^beta)."""

    beta: Fraction
    one_over_delta: Fraction
    gamma: Fraction
    z: Fraction
    nu: Fraction

    @property
    def delta(self) -> Fraction:
        return 1 / self.one_over_delta

    def as_floats(self) -> dict[str, float]:
        return {k: float(v) for k, v in self.as_fractions().items()}

    def as_fractions(self) -> dict[str, Fraction]:
        return {
            "beta": self.beta,
            "one_over_delta": self.one_over_delta,
            "gamma": self.gamma,
            "z": self.z,
            "nu": self.nu,
        }


def characteristic_energy(c_p: float, density: float, d: int, p: int) -> float:
    return c_p * density ** (p / d)


def nondimensionalize(phys: PhysicalParams) -> ModelParams:
    """alpha = hbar*Omega/E_c and Delta = hbar*delta_L/E_c."""
    e_c = phys.characteristic_energy
    return ModelParams(
        dimension=phys.dimension,
        interaction_exponent=phys.interaction_exponent,
        alpha=HBAR * phys.rabi_frequency / e_c,
        delta=HBAR * phys.laser_detuning / e_c,
    )


def rabi_from_alpha(alpha: float, phys: PhysicalParams) -> float:
    """Inverse of the alpha map at the density and C_p of ``phys`` (rad/s)."""
    return alpha * phys.characteristic_energy / HBAR


def c6_atomic_to_si(c6_au: float) -> float:
    """Convert a C6 coefficient from atomic units (E_h a0^6) to J m^6.

    The sign is dropped: tabulated C6 values for nS states are often quoted
    negative, while the model uses the magnitude with a repulsive sign.
    """
    if not math.isfinite(c6_au):
        raise ParameterError("c6_au must be finite")
    if c6_au < 0:
        warnings.warn("negative C6 given; using its magnitude (repulsive convention)", stacklevel=2)
    return abs(c6_au) * C6_ATOMIC_UNIT


def c6_si_to_hz_um6(c6_si: float) -> float:
    """J m^6 -> Hz um^6 (i.e. C6/h with lengths in micrometres)."""
    return c6_si / PLANCK / MICROMETER**6


def critical_exponents(d: int, p: int) -> CriticalExponents:
    _check_dims(d, p)
    d_, p_ = Fraction(d), Fraction(p)
    beta = d_ / p_
    return CriticalExponents(
        beta=beta,
        one_over_delta=2 * d_ / (2 * p_ + d_),
        gamma=2 * (p_ + d_) / (2 * p_ + d_),
        z=p_,
        nu=beta / d_,
    )


# Values reported for comparison (fits to experiment and 100-particle numerics).
REFERENCE_EXPONENTS = {
    (1, 6): {
        "experiment": {"gamma": (1.08, 0.01), "one_over_delta": (0.16, 0.01)},
        "theory": {"gamma": Fraction(14, 13), "one_over_delta": Fraction(2, 13)},
        "numerics": {"gamma": 1.06, "one_over_delta": 0.150},
    },
    (3, 6): {
        "experiment": {"gamma": (1.25, 0.03), "one_over_delta": (0.45, 0.01)},
        "theory": {"gamma": Fraction(6, 5), "one_over_delta": Fraction(2, 5)},
        "numerics": {"gamma": 1.15, "one_over_delta": 0.404},
    },
}
