"""Mean-field equation of state alpha = f^delta |1 - Delta / f^(1/beta)|.

With delta = (2p+d)/2d and 1/beta = p/d one has delta - p/d = 1/2, so the
equation reads alpha = |f^delta - Delta sqrt(f)|. On the physical branch
(f >= max(0, Delta)^beta) the bracket is nonnegative and the right-hand side
increases monotonically in f.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from fractions import Fraction

from scipy import optimize

from .params import critical_exponents

_RTOL = 4 * sys.float_info.epsilon


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class EosSolution:
    f_R: float
    branch: str
    residual: float
    saturated: bool = False
    unclipped: float | None = None


def _exps(d: int, p: int) -> tuple[float, float]:
    ex = critical_exponents(d, p)
    return float(ex.delta), float(ex.beta)


def eos_alpha(f: float, delta: float, d: int, p: int) -> float:
    """Right-hand side of the equation of state."""
    dl, b = _exps(d, p)
    return f**dl * abs(1.0 - delta / f ** (1.0 / b))


def classical_fraction(delta: float, d: int, p: int) -> float:
    """Energy-minimizing fraction at alpha = 0: Delta^(d/p) for Delta > 0."""
    if delta <= 0:
        return 0.0
    return delta ** (d / p)


def _residual(f, alpha, delta, d, p):
    return abs(alpha - eos_alpha(f, delta, d, p))


def eos_solve(alpha: float, delta: float, d: int = 3, p: int = 6, *, cap: bool = True) -> EosSolution:
    """Physical root of the mean-field equation of state.

    The root is bracketed in u = ln f, starting from the classical value
    max(0, Delta)^beta and expanding upward until the sign changes.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0:
        f = classical_fraction(delta, d, p)
        return EosSolution(min(f, 1.0) if cap else f, "classical", 0.0, cap and f > 1.0, f)
    dl, b = _exps(d, p)

    def g(u):
        return math.exp(dl * u) - delta * math.exp(0.5 * u) - alpha

    if delta > 0:
        lo = b * math.log(delta)  # g(lo) = -alpha
    else:
        # for Delta <= 0 both terms are nonnegative; start below the smaller
        # of the pure-power estimates
        guesses = [math.log(alpha) / dl]
        if delta < 0:
            guesses.append(2.0 * math.log(alpha / -delta))
        lo = min(guesses) - 1.0
        while g(lo) > 0:
            lo -= 10.0
    hi = math.log(max(1.0, 2.0 * (alpha + abs(delta)) ** (1.0 / dl)))
    for _ in range(200):
        if g(hi) > 0:
            break
        hi += 1.0
    else:
        raise ConvergenceError(f"no bracket found: lo={lo}, hi={hi}")
    if g(lo) == 0:
        u = lo
    else:
        try:
            u = optimize.brentq(g, lo, hi, xtol=1e-15, rtol=_RTOL, maxiter=500)
        except (RuntimeError, ValueError) as exc:
            raise ConvergenceError(f"brentq failed in bracket [{lo}, {hi}]: {exc}") from exc
    f = math.exp(u)
    res = _residual(f, alpha, delta, d, p)
    if cap and f > 1.0:
        return EosSolution(1.0, "physical", res, True, f)
    return EosSolution(f, "physical", res, False, f)


def eos_roots(alpha: float, delta: float, d: int = 3, p: int = 6) -> list[EosSolution]:
    """All roots of the equation of state, tagged by branch (diagnostic).

    For Delta > 0 up to two extra roots sit below the classical value, where
    alpha = Delta sqrt(f) - f^delta has a single maximum at
    f* = (Delta / (2 delta))^(d/p).
    """
    roots = [eos_solve(alpha, delta, d, p, cap=False)]
    if delta <= 0 or alpha <= 0:
        return roots
    dl, _ = _exps(d, p)
    f_star = (delta / (2 * dl)) ** (d / p)

    def h(f):
        return delta * math.sqrt(f) - f**dl - alpha

    f_cl = classical_fraction(delta, d, p)
    if h(f_star) > 0:
        for a, b, tag in ((0.0, f_star, "unphysical_low"), (f_star, f_cl, "unphysical_mid")):
            f = optimize.brentq(h, a, b, xtol=1e-300, rtol=_RTOL, maxiter=500)
            roots.append(EosSolution(f, tag, _residual(f, alpha, delta, d, p)))
    return roots


def _scaling_powers(d: int, p: int) -> tuple[float, float]:
    one_over_delta = Fraction(2 * d, 2 * p + d)
    return float(one_over_delta), float(Fraction(2 * p, 2 * p + d))


def chi(y: float, d: int = 3, p: int = 6, alpha_ref: float = 1e-6) -> float:
    """Universal scaling function: f_R = alpha^(2d/(2p+d)) chi(Delta / alpha^(2p/(2p+d)))."""
    fp, dp = _scaling_powers(d, p)
    sol = eos_solve(alpha_ref, y * alpha_ref**dp, d, p, cap=False)
    return sol.f_R / alpha_ref**fp


def correlation_length_mf(f_R: float, d: int) -> float:
    """Mean spacing between Rydberg atoms, xi / a = f_R^(-1/d)."""
    if not f_R > 0:
        raise ValueError("f_R must be positive")
    return f_R ** (-1.0 / d)
