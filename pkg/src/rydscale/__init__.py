"""Critical scaling of laser-excited frozen Rydberg gases.

Exponents, mean-field equation of state, superatom estimates, LDA cloud
averages and disorder-averaged exact dynamics of the blockaded spin model.
"""
from .params import (
    CriticalExponents,
    ModelParams,
    ParameterError,
    PhysicalParams,
    critical_exponents,
    nondimensionalize,
)
from .meanfield import chi, eos_solve
from .superatom import superatom_estimate

__version__ = "0.1.0"

__all__ = [
    "CriticalExponents",
    "ModelParams",
    "ParameterError",
    "PhysicalParams",
    "chi",
    "critical_exponents",
    "eos_solve",
    "nondimensionalize",
    "superatom_estimate",
    "__version__",
]
