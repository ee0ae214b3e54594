"""Saturation fits, rescaling to (alpha, g_R, f_R), power-law regression, collapse scoring."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from .constants import HBAR
from .params import characteristic_energy


class FitError(ValueError):
    pass


class UnitError(ValueError):
    pass


# Exponents quoted alongside the published fits; used to annotate reports only.
REPORTED_FITS = {
    "one_over_delta": {"experiment": (0.45, 0.01), "numerics": 0.404},
    "gamma": {"experiment": (1.25, 0.03), "numerics": 1.15},
}


def saturation_model(t, rate, n_sat):
    return n_sat * (1.0 - np.exp(-rate * np.asarray(t) / n_sat))


@dataclass
class SaturationFit:
    rate: float
    n_sat: float
    rate_stderr: float
    n_sat_stderr: float
    residual_norm: float
    converged: bool = True
    early_rate: float | None = None
    early_rate_stderr: float | None = None
    early_rate_model: float | None = None  # same early-time estimator applied to the fitted curve

    @property
    def n_sat_constrained(self) -> bool:
        return math.isfinite(self.n_sat_stderr) and self.n_sat_stderr < self.n_sat

    @property
    def rates_disagree(self) -> bool:
        """True when the early-time rate is > 2 sigma from what the fitted curve implies.

        Both sides use the same early-time estimator, so its truncation bias cancels.
        """
        if self.early_rate is None or self.early_rate_model is None:
            return False
        sig = math.hypot(self.rate_stderr, self.early_rate_stderr or 0.0)
        return abs(self.early_rate - self.early_rate_model) > 2 * sig

    def as_dict(self) -> dict:
        d = asdict(self)
        d["n_sat_constrained"] = self.n_sat_constrained
        d["rates_disagree"] = self.rates_disagree
        return d


def _early_rate(t, y, n_sat):
    """Initial slope from y = k t + c t^2 (through the origin) over points below 20% of saturation."""
    m = y <= 0.2 * n_sat
    if m.sum() < 3:
        m = np.zeros_like(y, dtype=bool)
        m[: min(3, y.size)] = True
    tt, yy = t[m], y[m]
    A = np.column_stack([tt, tt * tt])
    coef, _, rank, _ = np.linalg.lstsq(A, yy, rcond=None)
    if rank < 2:
        return None, None, m
    dof = max(tt.size - 2, 1)
    s2 = float(np.sum((yy - A @ coef) ** 2)) / dof
    cov = np.linalg.inv(A.T @ A) * s2
    return float(coef[0]), math.sqrt(cov[0, 0]), m


def fit_saturation(times, counts, initial_guess=None, max_nfev: int = 2000) -> SaturationFit:
    """Least-squares fit of N(t) = N_sat (1 - exp(-R t / N_sat))."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(counts, dtype=float)
    if t.size < 4 or t.size != y.size:
        raise FitError("need at least 4 (time, count) pairs of equal length")
    if np.any(np.diff(t) <= 0):
        raise FitError("times must be increasing")
    if np.any(y < 0):
        raise FitError("counts must be nonnegative")
    if not np.any(y > 0):
        raise FitError("all counts are zero")

    if initial_guess is None:
        n0 = float(np.max(y))
        r0 = (y[1] - y[0]) / (t[1] - t[0]) if t.size > 1 else 0.0
        if t[0] > 0 and y[0] > 0:
            r0 = max(r0, y[0] / t[0])
        if not r0 > 0:
            r0 = n0 / (t[-1] - t[0] + t[0])
        initial_guess = (r0, n0)
    x0 = np.array(initial_guess, dtype=float)
    scale = np.abs(x0)

    # fit in units of the initial guess so both parameters are O(1)
    def resid(u):
        r, n = u * scale
        return saturation_model(t, r, n) - y

    def jac(u):
        r, n = u * scale
        e = np.exp(-r * t / n)
        d_r = t * e
        d_n = 1.0 - e - (r * t / n) * e
        return np.column_stack([d_r * scale[0], d_n * scale[1]])

    res = optimize.least_squares(
        resid, np.ones(2), jac=jac, bounds=(1e-12, np.inf), method="trf",
        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev,
    )
    rate, n_sat = res.x * scale
    J = jac(res.x) / scale
    rss = float(res.fun @ res.fun)
    dof = max(t.size - 2, 1)
    try:
        cov = np.linalg.inv(J.T @ J) * (rss / dof)
        errs = np.sqrt(np.abs(np.diag(cov)))
    except np.linalg.LinAlgError:
        errs = np.array([np.inf, np.inf])
    grad = np.linalg.norm(J.T @ res.fun)
    if rss > 0 and math.isfinite(errs[1]):
        # N_sat -> infinity is the pure linear rise y = R t; if the data cannot reject
        # it at 2 sigma, the upper bound on N_sat is open and the linearized error is meaningless
        rss_lin = float(np.sum((y - (t @ y) / (t @ t) * t) ** 2))
        if (rss_lin - rss) / (rss / dof) < 4.0:
            errs[1] = np.inf
    ek, es, window = _early_rate(t, y, n_sat)
    ek_model = None
    if ek is not None:
        A = np.column_stack([t[window], t[window] ** 2])
        ek_model = float(np.linalg.lstsq(A, saturation_model(t[window], rate, n_sat), rcond=None)[0][0])
    return SaturationFit(float(rate), float(n_sat), float(errs[0]), float(errs[1]), math.sqrt(rss),
                         bool(res.success), ek, es, ek_model)


@dataclass
class ScalingPoint:
    alpha: float
    g_R: float
    f_R: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.alpha > 0 and self.g_R > 0 and self.f_R > 0):
            raise FitError(f"scaling point must be positive: {self}")


@dataclass
class RunRecord:
    """One measured (or simulated) excitation curve, reduced to (R, N_R).

    Physical runs give density n (m^-d), omega (rad/s), c_p (J m^p), with R in
    1/s. Dimensionless runs give alpha instead, with R in units of E_c/hbar.
    """

    N: float
    R: float
    N_R: float
    n: float | None = None
    omega: float | None = None
    c_p: float | None = None
    alpha: float | None = None
    run_id: str = ""

    @property
    def physical(self) -> bool:
        return self.alpha is None


def rescale(run: RunRecord, d: int = 3, p: int = 6) -> ScalingPoint:
    """g_R = hbar R / (N E_c) and f_R = N_R / N at alpha = hbar Omega / E_c."""
    phys = [run.n, run.omega, run.c_p]
    if run.alpha is not None:
        if any(v is not None for v in phys):
            raise UnitError("run mixes a dimensionless alpha with physical n/omega/C_p")
        alpha, g_R = run.alpha, run.R / run.N
        prov = {"run_id": run.run_id, "alpha": alpha}
    else:
        if any(v is None for v in phys):
            raise UnitError("physical run needs n, omega and c_p")
        e_c = characteristic_energy(run.c_p, run.n, d, p)
        alpha = HBAR * run.omega / e_c
        g_R = HBAR * run.R / (run.N * e_c)
        prov = {"run_id": run.run_id, "n": run.n, "omega": run.omega}
    if not (run.N > 0 and run.R > 0 and run.N_R > 0):
        raise FitError("N, R and N_R must be positive")
    return ScalingPoint(alpha, g_R, run.N_R / run.N, prov)


@dataclass
class PowerLawFit:
    exponent: float
    intercept: float
    exponent_stderr: float
    intercept_stderr: float
    r_squared: float
    point_count: int

    def predict(self, x):
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.exponent

    def as_dict(self) -> dict:
        return asdict(self)


def _as_xy(points, y=None):
    if y is None:
        arr = np.asarray(points, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise FitError("points must be a sequence of (x, y) pairs")
        return arr[:, 0], arr[:, 1]
    return np.asarray(points, dtype=float), np.asarray(y, dtype=float)


def fit_powerlaw(points, y=None, sigma=None) -> PowerLawFit:
    """Least squares of ln y = exponent * ln x + intercept.

    ``sigma`` (standard errors of y) switches to inverse-variance weights on
    ln y; equal sigmas give the unweighted fit.
    """
    x, yv = _as_xy(points, y)
    if x.size < 3:
        raise FitError("need at least 3 points")
    if np.any(x <= 0) or np.any(yv <= 0):
        raise FitError("power-law fit needs positive data")
    lx, ly = np.log(x), np.log(yv)
    n = lx.size
    if sigma is None:
        w = np.ones(n)
    else:
        s = np.asarray(sigma, dtype=float) / yv
        if np.any(s <= 0):
            raise FitError("sigma must be positive")
        w = 1.0 / s**2
        w = w / w.mean()
    W = w.sum()
    xm = (w @ lx) / W
    ym = (w @ ly) / W
    sxx = w @ (lx - xm) ** 2
    if sxx == 0:
        raise FitError("x values must not all coincide")
    slope = (w @ ((lx - xm) * (ly - ym))) / sxx
    icpt = ym - slope * xm
    res = ly - (slope * lx + icpt)
    s2 = (w @ res**2) / (n - 2) if n > 2 else 0.0
    se_slope = math.sqrt(s2 / sxx)
    se_icpt = math.sqrt(s2 * (1.0 / W + xm**2 / sxx))
    syy = w @ (ly - ym) ** 2
    r2 = 1.0 - (w @ res**2) / syy if syy > 0 else 1.0
    return PowerLawFit(float(slope), float(icpt), se_slope, se_icpt, float(r2), int(n))


def bootstrap_powerlaw(x, samples, n_boot: int = 1000, seed: int = 0) -> tuple[float, float]:
    """Exponent mean and spread from resampling realizations.

    ``samples[i]`` holds the per-realization observable at abscissa ``x[i]``.
    """
    x = np.asarray(x, dtype=float)
    rng = np.random.default_rng(seed)
    slopes = np.empty(n_boot)
    for b in range(n_boot):
        yb = [np.mean(np.asarray(s)[rng.integers(0, len(s), len(s))]) for s in samples]
        slopes[b] = fit_powerlaw(x, np.asarray(yb)).exponent
    return float(slopes.mean()), float(slopes.std(ddof=1))


@dataclass
class CollapseReport:
    fit: PowerLawFit
    rms_log_residual: float
    group_means: list[float]
    group_stderrs: list[float]
    collapsed: bool

    def as_dict(self) -> dict:
        return {
            "fit": self.fit.as_dict(),
            "rms_log_residual": self.rms_log_residual,
            "group_means": self.group_means,
            "group_stderrs": self.group_stderrs,
            "collapsed": self.collapsed,
        }


def collapse_quality(groups, observable: str = "f_R", abs_floor: float = 1e-9) -> CollapseReport:
    """Fit one power law to pooled groups and test each group's mean offset.

    ``groups`` is a list of lists of ScalingPoint (or of (x, y) pairs).
    A group's offset counts as zero when |mean| <= 2 stderr + ``abs_floor``;
    stderr uses the group's own scatter when it has >= 3 points.
    """
    if len(groups) < 2:
        raise FitError("collapse needs at least two groups")
    xs, ys, labels = [], [], []
    for g, pts in enumerate(groups):
        for pt in pts:
            if isinstance(pt, ScalingPoint):
                xs.append(pt.alpha)
                ys.append(getattr(pt, observable))
            else:
                xs.append(pt[0])
                ys.append(pt[1])
            labels.append(g)
    x, y, labels = np.array(xs), np.array(ys), np.array(labels)
    fit = fit_powerlaw(x, y)
    res = np.log(y) - (fit.exponent * np.log(x) + fit.intercept)
    rms = float(np.sqrt(np.mean(res**2)))
    pooled_sd = float(np.sqrt(np.sum(res**2) / max(res.size - 2, 1)))
    means, errs = [], []
    for g in range(len(groups)):
        r = res[labels == g]
        if r.size == 0:
            raise FitError(f"group {g} is empty")
        sd = float(np.std(r, ddof=1)) if r.size >= 3 else pooled_sd
        means.append(float(r.mean()))
        errs.append(sd / math.sqrt(r.size))
    ok = all(abs(m) <= 2 * e + abs_floor for m, e in zip(means, errs))
    return CollapseReport(fit, rms, means, errs, ok)


