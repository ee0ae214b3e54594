"""Physical constants (CODATA 2018), SI units.

Kept as literals rather than pulled from scipy.constants so that derived
values do not shift when scipy moves to a newer CODATA release.
"""

HBAR = 1.054571817e-34  # J s
PLANCK = 6.62607015e-34  # J s
HARTREE = 4.3597447222071e-18  # J
BOHR_RADIUS = 5.29177210903e-11  # m

# one atomic unit of a C6 coefficient, E_h * a0^6, in J m^6
C6_ATOMIC_UNIT = HARTREE * BOHR_RADIUS**6

MICROMETER = 1e-6  # m

TABLE = {
    "hbar": (HBAR, "J s"),
    "h": (PLANCK, "J s"),
    "hartree": (HARTREE, "J"),
    "bohr_radius": (BOHR_RADIUS, "m"),
}
