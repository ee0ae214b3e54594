"""Parsing of quantities with unit suffixes ("2pi*154 kHz", "3.2e19 m^-3", "8.6 um").

Everything is converted to SI exactly once, here.
"""
from __future__ import annotations

import math
import re

from .constants import C6_ATOMIC_UNIT, PLANCK


class UnitParseError(ValueError):
    pass


_PREFIX = {"": 1.0, "k": 1e3, "M": 1e6, "G": 1e9, "T": 1e12, "m": 1e-3, "u": 1e-6, "µ": 1e-6, "n": 1e-9}

_LENGTH = {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9, "a0": 5.29177210903e-11}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9}

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_PATTERN = re.compile(rf"^\s*(?:(?P<twopi>2\s*\*?\s*pi)\s*(?:\*|x|×)?\s*)?(?P<num>{_NUM})\s*(?P<unit>.*?)\s*$")


def _split(text) -> tuple[float, str, bool]:
    if isinstance(text, (int, float)):
        return float(text), "", False
    m = _PATTERN.match(str(text))
    if not m:
        raise UnitParseError(f"cannot parse quantity {text!r}")
    return float(m["num"]), m["unit"].replace(" ", ""), m["twopi"] is not None


def angular_frequency(text) -> float:
    """rad/s. Plain Hz values are cyclic frequencies and get a factor 2 pi
    unless the value already carries an explicit "2pi" prefix."""
    val, unit, twopi = _split(text)
    if unit in ("rad/s", "1/s", "s^-1"):
        return val * (2 * math.pi if twopi else 1.0)
    m = re.fullmatch(r"([kMGTmuµn]?)Hz", unit)
    if not m:
        raise UnitParseError(f"unknown frequency unit in {text!r}")
    return 2 * math.pi * val * _PREFIX[m[1]]


def length(text) -> float:
    val, unit, _ = _split(text)
    if unit not in _LENGTH:
        raise UnitParseError(f"unknown length unit in {text!r}")
    return val * _LENGTH[unit]


def duration(text) -> float:
    val, unit, _ = _split(text)
    if unit not in _TIME:
        raise UnitParseError(f"unknown time unit in {text!r}")
    return val * _TIME[unit]


def density(text, d: int = 3) -> float:
    """Number density in m^-d; accepts m^-d and cm^-d (also um^-d)."""
    val, unit, _ = _split(text)
    m = re.fullmatch(r"(m|cm|um|µm)\^?-(\d)", unit)
    if not m or int(m[2]) != d:
        raise UnitParseError(f"expected a {d}d density (e.g. m^-{d}) in {text!r}")
    return val / _LENGTH[m[1]] ** d


def interaction_coefficient(text, p: int = 6) -> float:
    """C_p in J m^p. Accepts "au" (p = 6 only), "J m^p" and "<prefix>Hz um^p" (C_p / h)."""
    val, unit, _ = _split(text)
    val = abs(val)
    if unit in ("au", "a.u."):
        if p != 6:
            raise UnitParseError("atomic units are only supported for C6")
        return val * C6_ATOMIC_UNIT
    m = re.fullmatch(rf"Jm\^?{p}", unit)
    if m:
        return val
    m = re.fullmatch(rf"([kMGT]?)Hz(um|µm|m)\^?{p}", unit)
    if m:
        return val * _PREFIX[m[1]] * PLANCK * _LENGTH[m[2]] ** p
    raise UnitParseError(f"unknown C_{p} unit in {text!r}")
