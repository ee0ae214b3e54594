"""Local-density averaging of the Rydberg fraction over Gaussian clouds."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

from .meanfield import eos_solve
from .params import _check_dims
from .superatom import blockade_radius


class LdaWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CloudSpec:
    """Thermal cloud with Gaussian radii ``sigmas`` (any length unit)."""

    sigmas: tuple[float, ...]
    atom_number: float

    def __post_init__(self):
        sig = tuple(float(s) for s in self.sigmas)
        if not sig or any(not s > 0 for s in sig):
            raise ValueError("sigmas must be positive")
        if not self.atom_number > 0:
            raise ValueError("atom_number must be positive")
        object.__setattr__(self, "sigmas", sig)

    @property
    def dimension(self) -> int:
        return len(self.sigmas)

    @property
    def peak_density(self) -> float:
        return self.atom_number / ((2 * math.pi) ** (self.dimension / 2) * math.prod(self.sigmas))

    def density(self, r) -> np.ndarray:
        r = np.atleast_2d(np.asarray(r, dtype=float))
        q = 0.5 * np.sum((r / np.asarray(self.sigmas)) ** 2, axis=-1)
        return self.peak_density * np.exp(-q)


def closed_form_prefactor(d: int, p: int, cloud_dim: int | None = None) -> float:
    """(1 - (p/d)/delta)^(-D/2) for a D-dimensional Gaussian, with 1/delta = 2d/(2p+d)."""
    _check_dims(d, p)
    D = d if cloud_dim is None else cloud_dim
    s = 1 - Fraction(p, d) * Fraction(2 * d, 2 * p + d)
    if s <= 0:
        raise ValueError("divergent cloud average: 1 - (p/d)/delta <= 0")
    return float(s) ** (-D / 2)


def _check_validity(cloud: CloudSpec, alpha_peak: float, d: int, p: int) -> bool:
    a = cloud.peak_density ** (-1.0 / cloud.dimension)
    xi = blockade_radius(alpha_peak, d, p) * a
    if xi > min(cloud.sigmas):
        warnings.warn(
            f"blockade radius {xi:.3g} exceeds the smallest cloud radius {min(cloud.sigmas):.3g}; "
            "LDA is outside its range of validity",
            LdaWarning,
            stacklevel=3,
        )
        return False
    return True


def lda_average(
    cloud: CloudSpec, alpha_peak: float, d: int = 3, p: int = 6, delta: float | None = None, cap: bool = True
) -> float:
    """Cloud-averaged f_R = (1/N) int f_R(r) n(r) dr.

    The local law is f_R = alpha(r)^(1/delta) with alpha(r) = alpha_peak (n(0)/n(r))^(p/d).
    For that law the integrand factorizes, and each Cartesian factor is
    integrated by adaptive quadrature. Passing ``delta`` (the detuning at
    the trap centre) switches the local law to the full
    mean-field equation of state, reduced to a radial integral in whitened
    coordinates. There ``cap`` clips the local fraction at 1; without the cap,
    delta = 0 reproduces the pure power law.
    """
    if not alpha_peak > 0:
        raise ValueError("alpha_peak must be positive")
    if cloud.dimension != d:
        raise ValueError(f"cloud is {cloud.dimension}d but d={d}")
    _check_validity(cloud, alpha_peak, d, p)
    inv_delta = 2 * d / (2 * p + d)
    s = (p / d) * inv_delta
    if delta is None:
        total = alpha_peak**inv_delta
        # each Cartesian factor in units of its own sigma, so tiny radii cannot hide the peak from quad
        norm = 1.0 / math.sqrt(2 * math.pi)
        for _ in cloud.sigmas:
            val, _ = integrate.quad(
                lambda u: norm * math.exp(-(1 - s) * u * u / 2),
                -np.inf, np.inf, epsabs=0.0, epsrel=1e-12, limit=200,
            )
            total *= val
        return total
    D = cloud.dimension
    # radial measure of a D-dim standard normal
    c = 2 * math.pi ** (D / 2) / math.gamma(D / 2) / (2 * math.pi) ** (D / 2)

    def integrand(rho):
        weight = c * rho ** (D - 1) * math.exp(-rho * rho / 2)
        stretch = (p / d) * rho * rho / 2
        if cap and stretch > 600.0:
            return weight  # f_R is clipped to 1 in the dilute wings
        a_loc = alpha_peak * math.exp(stretch)
        # Delta = hbar delta_L / E_c scales with the local density exactly like alpha
        d_loc = delta * a_loc / alpha_peak
        return weight * eos_solve(a_loc, d_loc, d, p, cap=cap).f_R

    # the weight is below 1e-300 beyond rho = 40; uncapped, stop before alpha overflows
    upper = 40.0 if cap else min(40.0, math.sqrt(1200.0 * d / p))
    val, _ = integrate.quad(integrand, 0.0, upper, epsabs=0.0, epsrel=1e-10, limit=400)
    return val


def lda_prefactor(cloud: CloudSpec, alpha_peak: float, d: int = 3, p: int = 6) -> float:
    """Quadrature result divided by alpha_peak^(1/delta)."""
    return lda_average(cloud, alpha_peak, d, p) / alpha_peak ** (2 * d / (2 * p + d))


def effective_line_density(cloud: CloudSpec):
    """Transverse-integrated profile along the last axis; returns (callable n1, peak n1)."""
    *trans, sz = cloud.sigmas
    if trans and not all(sz > s for s in trans):
        warnings.warn("cloud is not cigar shaped along its last axis", LdaWarning, stacklevel=2)
    peak = cloud.atom_number / (math.sqrt(2 * math.pi) * sz)

    def n1(z):
        z = np.asarray(z, dtype=float)
        return peak * np.exp(-(z**2) / (2 * sz**2))

    return n1, peak
