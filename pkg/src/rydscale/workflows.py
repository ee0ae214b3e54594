"""End-to-end runs behind the CLI subcommands.

Kept separate from the argument parsing so tests can drive them directly.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import units
from .analysis import (
    CollapseReport,
    FitError,
    PowerLawFit,
    RunRecord,
    SaturationFit,
    ScalingPoint,
    collapse_quality,
    fit_powerlaw,
    fit_saturation,
    rescale,
)
from .config import AlphaGrid, BasisBlock, ConfigError, EnsembleBlock, SimulateConfig, SweepConfig, TimeBlock
from .constants import HBAR
from .ensemble import mix_seed
from .lda import CloudSpec, LdaWarning, closed_form_prefactor, lda_average
from .meanfield import eos_solve
from .params import ModelParams, PhysicalParams, characteristic_energy, nondimensionalize
from .quantum import AdaptiveBasis, BasisSpec, ExcitationTrajectory, default_time_grid, disorder_average


def alpha_values(grid) -> list[float]:
    if isinstance(grid, AlphaGrid):
        if grid.count == 1:
            return [grid.min]
        return [float(a) for a in np.geomspace(grid.min, grid.max, grid.count)]
    return [float(a) for a in grid]


def time_grid(block: TimeBlock, alpha: float) -> np.ndarray:
    if block.t_max is not None:
        t_max = block.t_max
    else:
        if not alpha > 0:
            raise ConfigError("t_max_alpha needs alpha > 0; give an absolute t_max")
        t_max = block.t_max_alpha / alpha
    if block.grid == "linear":
        return np.linspace(t_max / block.n_lin, t_max, block.n_lin)
    return default_time_grid(t_max, block.n_log, block.n_lin)


def basis_for(block: BasisBlock, N: int):
    if block.mode == "adaptive":
        return AdaptiveBasis(min(block.start, N), block.rel_change)
    if block.mode == "full":
        return BasisSpec(N, "full")
    return BasisSpec.truncated(N, block.n_max)


def _average(model: ModelParams, ens: EnsembleBlock, basis, times, tol, seed, workers, length_scale=1.0):
    return disorder_average(
        model, ens.N, ens.geometry, ens.realizations, basis_for(basis, ens.N), times, tol, seed,
        r_min=ens.r_min, sigmas=ens.sigmas, length_scale=length_scale, workers=workers,
    )


def run_simulate(cfg: SimulateConfig, workers: int = 1) -> tuple[ExcitationTrajectory, dict]:
    m = cfg.model
    meta: dict = {}
    if cfg.physical is not None:
        phys = PhysicalParams(
            dimension=m.d, interaction_exponent=m.p, atom_number=cfg.ensemble.N,
            **cfg.physical.resolve(m.d, m.p),
        )
        model = nondimensionalize(phys)
        meta["characteristic_energy_J"] = phys.characteristic_energy
        meta["time_unit_s"] = HBAR / phys.characteristic_energy
    else:
        model = ModelParams(m.d, m.p, m.alpha, m.delta)
    meta["alpha"] = model.alpha
    meta["delta"] = model.delta
    times = time_grid(cfg.time, model.alpha)
    traj = _average(model, cfg.ensemble, cfg.basis, times, cfg.tol, cfg.seed, workers)
    meta.update(
        seeds=traj.seeds,
        n_max=traj.n_max,
        norm_drift=traj.norm_drift,
        energy_drift=traj.energy_drift,
    )
    return traj, meta


@dataclass
class SweepRun:
    route: str
    index: int
    alpha: float
    density: float
    omega: float
    seed: int
    fit: SaturationFit
    point: ScalingPoint
    trajectory: ExcitationTrajectory = field(repr=False)


@dataclass
class SweepResult:
    runs: list[SweepRun]
    f_fit: PowerLawFit
    g_fit: PowerLawFit
    f_collapse: CollapseReport | None
    g_collapse: CollapseReport | None
    d: int
    p: int

    @property
    def collapsed(self) -> bool:
        if self.f_collapse is None or self.g_collapse is None:
            return False
        return self.f_collapse.collapsed and self.g_collapse.collapsed

    def groups(self) -> dict[str, list[ScalingPoint]]:
        return _route_groups(self.runs)

    def report(self) -> dict:
        return {
            "d": self.d,
            "p": self.p,
            "one_over_delta": self.f_fit.as_dict(),
            "gamma": self.g_fit.as_dict(),
            "collapse_f_R": None if self.f_collapse is None else self.f_collapse.as_dict(),
            "collapse_g_R": None if self.g_collapse is None else self.g_collapse.as_dict(),
            "collapsed": self.collapsed,
            "runs": [
                {
                    "route": r.route,
                    "index": r.index,
                    "alpha": r.alpha,
                    "density": r.density,
                    "omega": r.omega,
                    "seed": r.seed,
                    "saturation_fit": r.fit.as_dict(),
                    "g_R": r.point.g_R,
                    "f_R": r.point.f_R,
                }
                for r in self.runs
            ],
        }


def run_sweep(cfg: SweepConfig, workers: int = 1, progress=None) -> SweepResult:
    """Simulate every alpha along each route, fit, rescale and test collapse.

    drive route: density fixed at the reference, alpha set through Omega.
    density route: Omega fixed at the value giving the geometric-mean alpha at
    the reference density; alpha set through n. Density-route runs are
    simulated in reference units (positions scaled by (n_ref/n)^(1/d)), so the
    physical rescaling is exercised rather than bypassed.
    """
    d, p = cfg.model.d, cfg.model.p
    alphas = alpha_values(cfg.sweep.alphas)
    if not alphas:
        raise ConfigError("empty sweep")
    try:
        n_ref = units.density(cfg.sweep.reference.density, d)
        c_p = units.interaction_coefficient(cfg.sweep.reference.c6, p)
    except units.UnitParseError as exc:
        raise ConfigError(str(exc)) from exc
    e_ref = characteristic_energy(c_p, n_ref, d, p)
    t_unit = HBAR / e_ref
    alpha_mid = math.exp(np.mean(np.log(alphas)))
    omega_fixed = alpha_mid * e_ref / HBAR

    runs: list[SweepRun] = []
    N = cfg.ensemble.N
    for r_idx, route in enumerate(cfg.sweep.routes):
        route_seed = mix_seed(cfg.seed, r_idx)
        for i, alpha in enumerate(alphas):
            seed = mix_seed(route_seed, i)
            if route == "drive":
                n, omega, scale = n_ref, alpha * e_ref / HBAR, 1.0
                model = ModelParams(d, p, alpha, 0.0)
            else:
                # alpha = hbar omega / (C_p n^(p/d))  =>  n = n_ref (alpha_mid / alpha)^(d/p)
                n = n_ref * (alpha_mid / alpha) ** (d / p)
                omega = omega_fixed
                scale = (n_ref / n) ** (1.0 / d)
                model = ModelParams(d, p, alpha_mid, 0.0)
            # own-unit grid stretched into reference units: hbar/E_c = scale^p hbar/E_ref
            times = time_grid(cfg.time, alpha) * scale**p
            traj = _average(model, cfg.ensemble, cfg.basis, times, cfg.tol, seed, workers, scale)
            t_phys = times * t_unit
            fit = fit_saturation(t_phys, N * traj.f_R_mean)
            rec = RunRecord(N=N, R=fit.rate, N_R=fit.n_sat, n=n, omega=omega, c_p=c_p, run_id=f"{route}-{i}")
            point = rescale(rec, d, p)
            runs.append(SweepRun(route, i, alpha, n, omega, seed, fit, point, traj))
            if progress is not None:
                progress(runs[-1])
    pts = [r.point for r in runs]
    xs = [pt.alpha for pt in pts]
    f_fit = fit_powerlaw(xs, [pt.f_R for pt in pts])
    g_fit = fit_powerlaw(xs, [pt.g_R for pt in pts])
    f_col = g_col = None
    groups = list(_route_groups(runs).values())
    if len(groups) >= 2:
        f_col = collapse_quality(groups, "f_R")
        g_col = collapse_quality(groups, "g_R")
    return SweepResult(runs, f_fit, g_fit, f_col, g_col, d, p)


def _route_groups(runs):
    out: dict[str, list[ScalingPoint]] = {}
    for r in runs:
        out.setdefault(r.route, []).append(r.point)
    return out


# --- external data --------------------------------------------------------------

_COLUMNS = ("n", "omega", "N", "time", "N_R")


def read_external_csv(path: str | Path, d: int = 3) -> list[dict]:
    """Read excitation curves: header row, units row, then data rows.

    Returns one dict per curve with SI arrays, grouped by (n, omega, N) in
    order of first appearance.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if len(rows) < 2:
        raise ConfigError("external data needs a header row and a units row")
    header = [h.strip() for h in rows[0]]
    missing = [c for c in _COLUMNS if c not in header]
    if missing:
        raise ConfigError(f"missing columns: {missing}")
    unit_row = dict(zip(header, (u.strip() for u in rows[1])))
    col = {c: header.index(c) for c in _COLUMNS}

    def conv(name, text):
        u = unit_row.get(name, "")
        q = f"{text} {u}"
        try:
            if name == "n":
                return units.density(q, d)
            if name == "omega":
                return units.angular_frequency(q)
            if name == "time":
                return units.duration(q)
        except units.UnitParseError as exc:
            raise ConfigError(str(exc)) from exc
        if u not in ("", "1", "count"):
            raise ConfigError(f"column {name} must be dimensionless, got unit {u!r}")
        return float(text)

    curves: dict[tuple, dict] = {}
    for r in rows[2:]:
        try:
            vals = {c: conv(c, r[col[c]]) for c in _COLUMNS}
        except (IndexError, ValueError) as exc:
            raise ConfigError(f"bad data row {r}: {exc}") from exc
        key = (vals["n"], vals["omega"], vals["N"])
        cur = curves.setdefault(key, {"n": key[0], "omega": key[1], "N": key[2], "time": [], "N_R": []})
        cur["time"].append(vals["time"])
        cur["N_R"].append(vals["N_R"])
    out = []
    for cur in curves.values():
        order = np.argsort(cur["time"])
        cur["time"] = np.asarray(cur["time"])[order]
        cur["N_R"] = np.asarray(cur["N_R"])[order]
        out.append(cur)
    return out


def collapse_external(curves: list[dict], c_p: float, d: int = 3, p: int = 6) -> dict:
    """Fit each curve, rescale, and test collapse across densities."""
    runs = []
    for k, cur in enumerate(curves):
        fit = fit_saturation(cur["time"], cur["N_R"])
        rec = RunRecord(N=cur["N"], R=fit.rate, N_R=fit.n_sat, n=cur["n"], omega=cur["omega"], c_p=c_p,
                        run_id=f"curve-{k}")
        runs.append((cur, fit, rescale(rec, d, p)))
    by = "n" if len({c["n"] for c, _, _ in runs}) >= 2 else "omega"
    groups: dict[float, list[ScalingPoint]] = {}
    for cur, _, pt in runs:
        groups.setdefault(cur[by], []).append(pt)
    pts = [pt for _, _, pt in runs]
    xs = [pt.alpha for pt in pts]
    report = {
        "d": d,
        "p": p,
        "grouped_by": by,
        "one_over_delta": fit_powerlaw(xs, [pt.f_R for pt in pts]).as_dict(),
        "gamma": fit_powerlaw(xs, [pt.g_R for pt in pts]).as_dict(),
        "runs": [
            {"n": c["n"], "omega": c["omega"], "N": c["N"], "alpha": pt.alpha, "g_R": pt.g_R, "f_R": pt.f_R,
             "saturation_fit": f.as_dict()}
            for c, f, pt in runs
        ],
    }
    if len(groups) >= 2:
        report["collapse_f_R"] = collapse_quality(list(groups.values()), "f_R").as_dict()
        report["collapse_g_R"] = collapse_quality(list(groups.values()), "g_R").as_dict()
    else:
        raise FitError("collapse needs curves at two or more densities or drive strengths")
    return report


# --- closed-form tables ----------------------------------------------------------


def eos_rows(alphas, deltas, d: int, p: int) -> list[tuple]:
    """(alpha, Delta, f_R, y, chi) rows; chi = f_R / alpha^(1/delta), y = Delta / alpha^(2p/(2p+d))."""
    fp = 2 * d / (2 * p + d)
    dp = 2 * p / (2 * p + d)
    rows = []
    for a in alphas:
        for dl in deltas:
            sol = eos_solve(a, dl, d, p)
            y = dl / a**dp if a > 0 else math.nan
            c = sol.f_R / a**fp if a > 0 else math.nan
            rows.append((a, dl, sol.f_R, y, c, int(sol.saturated)))
    return rows


def lda_rows(sigmas_m, atom_number, omegas, c_p, d: int, p: int) -> list[tuple]:
    cloud = CloudSpec(tuple(sigmas_m), atom_number)
    e_c = characteristic_energy(c_p, cloud.peak_density, d, p)
    rows = []
    for om in omegas:
        a_peak = HBAR * om / e_c
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", LdaWarning)
            f = lda_average(cloud, a_peak, d, p)
        flag = int(any(issubclass(w.category, LdaWarning) for w in caught))
        rows.append((om, a_peak, f, f / a_peak ** (2 * d / (2 * p + d)), closed_form_prefactor(d, p), flag))
    return rows

